"""Named model presets for the three standard simulation campaigns."""

import numpy as np

from .errors import ValidationError
from .model import (
    DEFAULT_MASSES,
    GaugeRotation,
    Model,
    beta_decay_interactions,
    gauge_vop,
    rotation_2d,
)

# Middle-block pair tensor whose outer frame vanishes: conserves the spin
# diagonal and the sigma_z projection of species a+c.
ZERO_FRAME_VOP = np.array(
    [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, -5.0 / 8.0, 1.0 / 3.0, 0.0],
        [0.0, -1.0 / 4.0, 2.0 / 15.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
    ],
    dtype=complex,
)

ROTATION_ANGLE = np.pi / 5.0

PRESET_NAMES = ("beta-decay", "zero-frame", "zero-frame-rotated")


def make_preset(name, masses=None, c_v=1.0, c_a=-1.255):
    """Build one of the named models.

    beta-decay          all couplings proportional to the identity, from the
                        vector/axial constants (defaults C_V=1, C_A=-1.255)
    zero-frame          the middle-block pair tensor above
    zero-frame-rotated  the same tensor with the b species rotated by pi/5;
                        the inverse rotation is attached as the frame gauge
    """
    masses = DEFAULT_MASSES if masses is None else masses
    if name == "beta-decay":
        return Model.from_interactions(beta_decay_interactions(c_v, c_a), masses=masses)
    if name == "zero-frame":
        return Model.from_vop(ZERO_FRAME_VOP.copy(), masses=masses)
    if name == "zero-frame-rotated":
        u_b = rotation_2d(ROTATION_ANGLE)
        rotate = GaugeRotation.single(1, u_b)
        vop = gauge_vop(rotate, ZERO_FRAME_VOP)
        return Model.from_vop(vop, masses=masses, gauge=rotate.inverse())
    raise ValidationError(f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}")
