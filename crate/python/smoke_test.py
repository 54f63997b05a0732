#!/usr/bin/env python3
"""Smoke test for the shtuka_py extension module.

Build and stage the module first:

    cargo build -p shtuka-py --release
    cp target/release/libshtuka_py.so python/shtuka_py.so

then run `python3 python/smoke_test.py`.
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import shtuka_py as sk  # noqa: E402


def check(name, ok):
    print(f"{'PASS' if ok else 'FAIL'} {name}")
    if not ok:
        sys.exit(1)


def main():
    # field arithmetic: Frobenius squares coefficients over F_4
    f4 = sk.Ring(2, 2)
    x = sk.Series(f4, 0, [[0, 1], [0, 1]], 10)  # t + t z
    fx = x.frobenius()
    check("frobenius over F_4", fx.coeff(0) == [1, 1] and fx.coeff(1) == [1, 1])

    # geometric series inverse
    f3 = sk.Ring(3)
    one_minus_z = sk.Series(f3, 0, [1, 2], 4)
    inv = one_minus_z.invert()
    check(
        "invert(1 - z) = 1 + z + z^2 + z^3",
        [inv.coeff(e) for e in range(4)] == [[1], [1], [1], [1]],
    )

    # Smith form / relative position
    g = sk.Matrix(
        [
            [sk.Series.one(f3, 12), sk.Series.z_pow(f3, -1, 12)],
            [sk.Series.zero(f3, 12), sk.Series.one(f3, 12)],
        ]
    )
    check("relative position of unipotent with pole", g.relative_position() == [1, -1])
    u, mu, v = g.smith()
    check("smith exponents", mu == [1, -1])
    recon = u.mul(sk.Matrix.diag_z(f3, mu, 12)).mul(v)
    check("smith reconstruction", recon.eq_to_common_prec(g))

    # boundedness
    d = sk.Matrix.diag_z(f3, [1, 0], 12)
    check("bounded_by (1,0) leq", d.bounded_by([1, 0], "leq"))
    check("not bounded_by (0,0)", not d.bounded_by([0, 0], "leq"))

    # Newton slopes and decency of the supersingular matrix
    f2 = sk.Ring(2)
    b = sk.Matrix(
        [
            [sk.Series.zero(f2, 60), sk.Series.z_pow(f2, 1, 60)],
            [sk.Series.one(f2, 60), sk.Series.zero(f2, 60)],
        ]
    )
    check("supersingular slopes (1/2, 1/2)", b.newton_slopes(8) == [(1, 2), (1, 2)])
    check("decent at s = 2", b.check_decency(2))
    check("not decent at s = 1", not b.check_decency(1))
    check("kottwitz = 1", b.kottwitz() == 1)

    # Lang trivialization: b = 2 over F_3 splits over F_9
    b2 = sk.Shtuka(sk.Matrix([[sk.Series(f3, 0, [2], 8)]]))
    d_ext, c = b2.lang_trivialize()
    check("lang degree for b = 2 over F_3", d_ext == 2)
    d_ext, basis, galois = b2.tate_module()
    check("tate galois = 2", galois.entry(0, 0).coeff(0) == [2, 0])

    # quasi-isogeny: z * id is central
    unit = sk.Shtuka(sk.Matrix.identity(f2, 2, 12))
    z_id = sk.Matrix.diag_z(f2, [1, 1], 12)
    check("z * id is a quasi-isogeny", sk.is_quasi_isogeny(z_id, unit, unit))

    # ADLV: rank 1 window count and the superbasic count
    b1 = sk.Matrix.diag_z(f3, [2], 30)
    check("rank-1 adlv count = 2a + 1", sk.adlv_count(b1, [2], "eq", 1, 1) == 3)
    b40 = sk.Matrix(
        [
            [sk.Series.zero(f2, 40), sk.Series.z_pow(f2, 1, 40)],
            [sk.Series.one(f2, 40), sk.Series.zero(f2, 40)],
        ]
    )
    n_f2 = sk.adlv_count(b40, [1, 0], "leq", 1, 2)
    n_f4 = sk.adlv_count(b40, [1, 0], "leq", 2, 2)
    check("superbasic adlv nonempty over F_2 and F_4", n_f2 > 0 and n_f4 >= n_f2)

    # metric
    idm = sk.Matrix.identity(f2, 2, 20)
    far = sk.Matrix.diag_z(f2, [2, -2], 20)
    check("metric distance 2", sk.metric_dtilde(idm, far) == 2)
    off = sk.Matrix.diag_z(f2, [1, 0], 20)
    check("incommensurable distance is None", sk.metric_dtilde(idm, off) is None)

    # torus norm identities over F_3 and F_5
    for p in (3, 5):
        alpha, beta = sk.torus_norm(p, 1, 8, 16)
        check(f"torus norm identities over F_{p}", alpha and beta)

    # lattice window counts
    check("15 window-1 lattices over F_2", sk.enumerate_lattice_count(f2, 2, 1) == 15)

    print("all smoke tests passed")


if __name__ == "__main__":
    main()
