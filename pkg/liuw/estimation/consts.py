# see LICENSE
"""
Layout of the 36-dimensional tangent space

The ordering is a repo-wide contract: the degradation detector reads the
leading 6x6 pose block and the measurement Jacobians write into these
columns. Rotational perturbations are applied on the right (R Exp(dtheta)).
"""

STATE_DIM = 36

SLICE_ROT = slice(0, 3)
SLICE_POS = slice(3, 6)
SLICE_VEL = slice(6, 9)
SLICE_BG = slice(9, 12)
SLICE_BA = slice(12, 15)
SLICE_GRAV = slice(15, 18)

SLICE_EXTR_L_ROT = slice(18, 21)
SLICE_EXTR_L_POS = slice(21, 24)
SLICE_EXTR_U_ROT = slice(24, 27)
SLICE_EXTR_U_POS = slice(27, 30)
SLICE_EXTR_W_ROT = slice(30, 33)
SLICE_EXTR_W_POS = slice(33, 36)

# (rotation slice, translation slice) per extrinsic
EXTRINSIC_SLICES = {
    'L': (SLICE_EXTR_L_ROT, SLICE_EXTR_L_POS),
    'U': (SLICE_EXTR_U_ROT, SLICE_EXTR_U_POS),
    'W': (SLICE_EXTR_W_ROT, SLICE_EXTR_W_POS),
}

# names accepted by the freeze mask
BLOCKS = {
    'rot': SLICE_ROT,
    'pos': SLICE_POS,
    'vel': SLICE_VEL,
    'bias_gyro': SLICE_BG,
    'bias_accel': SLICE_BA,
    'gravity': SLICE_GRAV,
    'extr_L': slice(18, 24),
    'extr_U': slice(24, 30),
    'extr_W': slice(30, 36),
}

STANDARD_GRAVITY = 9.81
