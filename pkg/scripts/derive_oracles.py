"""Recompute the frozen reference constants in tests/test_cone.py with mpmath.

Independent of the package: only the closed-form geometry is re-evaluated
at 30 significant digits.  Run it and diff against the test module.
"""

import mpmath as mp

mp.mp.dps = 30
R = mp.mpf(50)


def bottom_diameter(theta):
    return 2 * R * (1 - theta / (2 * mp.pi))


def vertex_angle_deg(d):
    return mp.degrees(2 * mp.asin(d / (2 * R)))


def floor_diameter(radius, phi_min=mp.pi / 2):
    return 2 * radius * mp.sin(phi_min / 2)


if __name__ == "__main__":
    print("D_AT_105  =", mp.nstr(bottom_diameter(mp.radians(105)), 18))
    # 70.71 as the double the package receives, not the exact decimal
    for name, d in (("PHI_90", 90), ("PHI_80", 80), ("PHI_7071", mp.mpf(70.71))):
        print(f"{name:9s} =", mp.nstr(vertex_angle_deg(d), 18))
    print("FLOOR_R40 =", mp.nstr(floor_diameter(mp.mpf(40)), 18))
    print("FLOOR_R50 =", mp.nstr(floor_diameter(R), 18))
    # 0.5 g t^2 at t = 0.5 s, g in mm/s^2
    print("FREE_FALL =", mp.nstr(mp.mpf("0.5") * 9810 * mp.mpf("0.5") ** 2, 18))
    # min insertion angle for D = 80: 2 pi (1 - D / 2R), in degrees
    print("THETA_80  =", mp.nstr(mp.degrees(2 * mp.pi * (1 - mp.mpf(80) / (2 * R))), 18))
