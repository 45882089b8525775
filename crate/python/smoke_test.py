#!/usr/bin/env python3
"""Smoke test for the _polylens extension module.

Builds the module if needed, imports it from a scratch directory, and
drives one representative call through every binding. Exits nonzero on the
first failed check.
"""

import cmath
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def locate_module() -> Path:
    candidates = [
        ROOT / "target" / "release" / "lib_polylens.so",
        ROOT / "target" / "debug" / "lib_polylens.so",
    ]
    for path in candidates:
        if path.exists():
            return path
    subprocess.run(
        ["cargo", "build", "-p", "polylens-py", "--release"],
        cwd=ROOT,
        check=True,
    )
    return candidates[0]


def import_module(so_path: Path, scratch: Path):
    shutil.copy2(so_path, scratch / "_polylens.so")
    sys.path.insert(0, str(scratch))
    import _polylens

    return _polylens


def close(a, b, tol):
    return abs(a - b) <= tol


def main() -> int:
    with tempfile.TemporaryDirectory() as scratch:
        pl = import_module(locate_module(), Path(scratch))

        # Conformal geometry of the lens.
        assert abs(pl.lens_map(0.5 + 0.0j)) <= 1e-12
        assert close(pl.lens_map_deriv(0.5 + 0.0j), -math.sqrt(3) * 1j, 1e-12)
        assert pl.lens_contains(0.5 + 0.3j)
        assert not pl.lens_contains(2.0 + 0.0j)
        assert pl.domain_contains("omega", 1 + 0j, 1 + 0j)
        assert pl.domain_contains("omega_x", 5 + 0j, 0.01 + 0j)
        assert not pl.domain_contains("omega_x", 5 + 0j, 0.2 + 0j)
        try:
            pl.lens_map(5 + 0j)
            raise AssertionError("lens_map accepted an exterior point")
        except ValueError:
            pass
        print("ok geometry")

        # Projection of the plateau bump is a multiple of the derivative.
        c = pl.projection_constant()
        assert close(c, 0.445, 1e-6)
        for z in (0.5 + 0.35j, 0.3 + 0.1j):
            lhs = pl.bergman_project(z)
            rhs = c * pl.lens_map_deriv(z)
            assert abs(lhs - rhs) <= 1e-3 * abs(rhs)
        print("ok projection")

        # Norms and the refinement verdicts.
        assert close(pl.sobolev_norm_sq("fprime", 0, depth=6), math.pi, 1e-6)
        assert close(pl.lp_norm("fprime", 2.0, depth=6), math.sqrt(math.pi), 1e-6)
        verdict, levels = pl.divergence_verdict("fprime", 2, [6, 8, 10, 12])
        assert verdict == "diverging" and len(levels) == 4
        verdict, _ = pl.divergence_verdict("chi", 0, [4, 5, 6, 7], depth=6)
        assert verdict == "bounded"
        print("ok regularity")

        # Moments and the Hilbert-Schmidt traces.
        assert pl.admissible("omega", 2, 2)
        assert not pl.admissible("omega", 1, 2)
        assert pl.admissible("omega_x", 1, 3)
        exact = math.log(256 * math.pi**2)
        assert close(pl.log_moment("omega_z", 0, 0), exact, 1e-12)
        assert close(pl.log_moment("omega_z", 0, 0, method="quadrature"), exact, 1e-6)
        s_omega, converged = pl.hs_partial_sum("omega", 256)
        s_prime, converged_prime = pl.hs_partial_sum("omega_prime", 256)
        assert converged and converged_prime
        assert close(s_omega, s_prime, 1e-12)
        assert close(s_omega, 254.01934979869034, 1e-9)
        exponent = pl.difference_decay_exponent("omega", 256, 8, 128)
        assert 1.8 <= exponent <= 2.2
        totals, slope, verdict = pl.bidisc_double_sum(64)
        assert verdict == "diverging" and slope >= 0.5 and len(totals) == 65
        report = pl.throat_display_report(8)
        assert "log_ratio" in report and len(report.splitlines()) >= 9
        print("ok hankel")

        # Intersection sampling and exceptional points.
        points, dets, flags = pl.sample_intersection("two_spheres", 20, 3)
        assert len(points) == len(dets) == len(flags) == 20
        for z1, z2 in points:
            assert close(z1.real, 0.5, 1e-8)
            assert close(abs(z2) ** 2, 0.75 - z1.imag**2, 1e-8)
        poles = pl.exceptional_points("two_spheres", 60, 3)
        assert len(poles) == 2
        assert close(poles[0][0], 0.5 - 1j * math.sqrt(3) / 2, 1e-6)
        assert close(poles[1][0], 0.5 + 1j * math.sqrt(3) / 2, 1e-6)
        assert all(abs(z2) <= 1e-6 for _, z2 in poles)
        print("ok intersections")

        # Distance functions and the plurisubharmonicity certificate.
        assert close(pl.distance_sq("real_plane", 1 + 2j, 3 - 4j), 20.0, 1e-9)
        matrix, min_eig = pl.distance_hessian("real_plane", 0.3 - 0.2j, 0.1 + 0.4j)
        assert close(matrix[0][0], 0.5, 1e-6) and close(matrix[1][1], 0.5, 1e-6)
        assert close(min_eig, 0.5, 1e-6)
        c_min, lam, scaled_min = pl.psh_certify(
            "real_plane", (0.1 + 0.3j, -0.2 + 0.5j), 0.4, 3, 10.0
        )
        assert close(c_min, 0.5, 1e-6)
        assert scaled_min >= 10.0
        assert close(scaled_min, lam * c_min, 1e-12)
        print("ok certificates")

    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
