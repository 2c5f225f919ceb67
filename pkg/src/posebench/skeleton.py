"""The 19-keypoint infant skeleton schema.

Keypoints are identified by a stable ordinal (1-19) and a lowercase name.
Ordinal order is the canonical row order in all table formats.
"""

from __future__ import annotations

from enum import IntEnum


class KeypointId(IntEnum):
    HEAD_TOP = 1
    NOSE = 2
    RIGHT_EAR = 3
    LEFT_EAR = 4
    UPPER_NECK = 5
    RIGHT_SHOULDER = 6
    RIGHT_ELBOW = 7
    RIGHT_WRIST = 8
    UPPER_CHEST = 9
    LEFT_SHOULDER = 10
    LEFT_ELBOW = 11
    LEFT_WRIST = 12
    MID_PELVIS = 13
    RIGHT_PELVIS = 14
    RIGHT_KNEE = 15
    RIGHT_ANKLE = 16
    LEFT_PELVIS = 17
    LEFT_KNEE = 18
    LEFT_ANKLE = 19

    @property
    def label(self) -> str:
        """Lowercase identifier used in file formats (e.g. ``head_top``)."""
        return self.name.lower()

    @classmethod
    def from_label(cls, label: str) -> "KeypointId":
        try:
            return cls[label.strip().upper()]
        except KeyError:
            raise KeyError(f"unknown keypoint name: {label!r}") from None


#: All keypoints in ordinal order.
KEYPOINTS: tuple[KeypointId, ...] = tuple(KeypointId)

N_KEYPOINTS = len(KEYPOINTS)

#: Left/right counterparts, used for inversion simulation and UI coloring.
#: Midline keypoints (head_top, nose, upper_neck, upper_chest, mid_pelvis)
#: have no counterpart and never take part in left/right swaps.
SYMMETRIC_PAIRS: tuple[tuple[KeypointId, KeypointId], ...] = (
    (KeypointId.RIGHT_EAR, KeypointId.LEFT_EAR),
    (KeypointId.RIGHT_SHOULDER, KeypointId.LEFT_SHOULDER),
    (KeypointId.RIGHT_ELBOW, KeypointId.LEFT_ELBOW),
    (KeypointId.RIGHT_WRIST, KeypointId.LEFT_WRIST),
    (KeypointId.RIGHT_PELVIS, KeypointId.LEFT_PELVIS),
    (KeypointId.RIGHT_KNEE, KeypointId.LEFT_KNEE),
    (KeypointId.RIGHT_ANKLE, KeypointId.LEFT_ANKLE),
)

#: Anatomically adjacent pairs, for drawing a skeleton overlay.
SKELETON_EDGES: tuple[tuple[KeypointId, KeypointId], ...] = (
    (KeypointId.HEAD_TOP, KeypointId.NOSE),
    (KeypointId.NOSE, KeypointId.RIGHT_EAR),
    (KeypointId.NOSE, KeypointId.LEFT_EAR),
    (KeypointId.NOSE, KeypointId.UPPER_NECK),
    (KeypointId.UPPER_NECK, KeypointId.UPPER_CHEST),
    (KeypointId.UPPER_CHEST, KeypointId.RIGHT_SHOULDER),
    (KeypointId.RIGHT_SHOULDER, KeypointId.RIGHT_ELBOW),
    (KeypointId.RIGHT_ELBOW, KeypointId.RIGHT_WRIST),
    (KeypointId.UPPER_CHEST, KeypointId.LEFT_SHOULDER),
    (KeypointId.LEFT_SHOULDER, KeypointId.LEFT_ELBOW),
    (KeypointId.LEFT_ELBOW, KeypointId.LEFT_WRIST),
    (KeypointId.UPPER_CHEST, KeypointId.MID_PELVIS),
    (KeypointId.MID_PELVIS, KeypointId.RIGHT_PELVIS),
    (KeypointId.RIGHT_PELVIS, KeypointId.RIGHT_KNEE),
    (KeypointId.RIGHT_KNEE, KeypointId.RIGHT_ANKLE),
    (KeypointId.MID_PELVIS, KeypointId.LEFT_PELVIS),
    (KeypointId.LEFT_PELVIS, KeypointId.LEFT_KNEE),
    (KeypointId.LEFT_KNEE, KeypointId.LEFT_ANKLE),
)
