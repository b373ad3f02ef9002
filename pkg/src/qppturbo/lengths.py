"""Per-length defaults and the LTE reference interleavers."""

from __future__ import annotations

import bisect

from .qpp import QppPolynomial

# (snr_db, num_terms) used to rank candidates at the listed lengths
PROFILE = {
    40: (7.5, 9),
    128: (5.5, 7),
    144: (5.0, 7),
    184: (5.0, 7),
    240: (4.5, 7),
    256: (4.5, 7),
    320: (4.0, 5),
    352: (3.5, 5),
    368: (3.5, 5),
    384: (3.0, 5),
    400: (3.0, 5),
    408: (3.0, 5),
    416: (3.0, 5),
    424: (3.0, 5),
    448: (3.0, 3),
    456: (3.0, 3),
    464: (3.0, 3),
    480: (3.0, 3),
    488: (3.0, 3),
    504: (3.0, 3),
}

# LTE QPP coefficients (f1, f2) for block sizes up to 512
LTE_QPP = {
    40: (3, 10), 48: (7, 12), 56: (19, 42), 64: (7, 16), 72: (7, 18),
    80: (11, 20), 88: (5, 22), 96: (11, 24), 104: (7, 26), 112: (41, 84),
    120: (103, 90), 128: (15, 32), 136: (9, 34), 144: (17, 108), 152: (9, 38),
    160: (21, 120), 168: (101, 84), 176: (21, 44), 184: (57, 46), 192: (23, 48),
    200: (13, 50), 208: (27, 52), 216: (11, 36), 224: (27, 56), 232: (85, 58),
    240: (29, 60), 248: (33, 62), 256: (15, 32), 264: (17, 198), 272: (33, 68),
    280: (103, 210), 288: (19, 36), 296: (19, 74), 304: (37, 76), 312: (19, 78),
    320: (21, 120), 328: (21, 82), 336: (115, 84), 344: (193, 86), 352: (21, 44),
    360: (133, 90), 368: (81, 46), 376: (45, 94), 384: (23, 48), 392: (243, 98),
    400: (151, 40), 408: (155, 102), 416: (25, 52), 424: (51, 106), 432: (47, 72),
    440: (91, 110), 448: (29, 168), 456: (29, 114), 464: (247, 58), 472: (29, 118),
    480: (89, 180), 488: (91, 122), 496: (157, 62), 504: (55, 84), 512: (31, 64),
}


def default_profile(L: int) -> tuple[float, int]:
    """(snr_db, num_terms) for L; unlisted lengths use the closest listed length below."""
    keys = sorted(PROFILE)
    i = bisect.bisect_right(keys, L) - 1
    return PROFILE[keys[max(i, 0)]]


def lte_reference(L: int) -> QppPolynomial | None:
    if L not in LTE_QPP:
        return None
    q1, q2 = LTE_QPP[L]
    return QppPolynomial(q1, q2, L)
