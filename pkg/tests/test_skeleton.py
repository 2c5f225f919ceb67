from posebench.skeleton import (
    KEYPOINTS,
    N_KEYPOINTS,
    SKELETON_EDGES,
    SYMMETRIC_PAIRS,
    KeypointId,
)

EXPECTED_ORDER = [
    "head_top",
    "nose",
    "right_ear",
    "left_ear",
    "upper_neck",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "upper_chest",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "mid_pelvis",
    "right_pelvis",
    "right_knee",
    "right_ankle",
    "left_pelvis",
    "left_knee",
    "left_ankle",
]


def test_nineteen_keypoints_in_ordinal_order():
    assert N_KEYPOINTS == 19
    assert [k.value for k in KEYPOINTS] == list(range(1, 20))
    assert [k.label for k in KEYPOINTS] == EXPECTED_ORDER


def test_name_ordinal_mapping_is_bijective():
    assert len({k.label for k in KEYPOINTS}) == 19
    assert len({k.value for k in KEYPOINTS}) == 19
    for k in KEYPOINTS:
        assert KeypointId.from_label(k.label) is k
        assert KeypointId(k.value) is k


def test_from_label_rejects_unknown_names():
    try:
        KeypointId.from_label("left_eyebrow")
    except KeyError as exc:
        assert "left_eyebrow" in str(exc)
    else:
        raise AssertionError("expected KeyError")


def test_symmetric_pairs_cover_all_sided_keypoints():
    sided = {k for pair in SYMMETRIC_PAIRS for k in pair}
    assert len(SYMMETRIC_PAIRS) == 7
    assert len(sided) == 14
    midline = set(KEYPOINTS) - sided
    assert {k.label for k in midline} == {
        "head_top",
        "nose",
        "upper_neck",
        "upper_chest",
        "mid_pelvis",
    }
    for right, left in SYMMETRIC_PAIRS:
        assert right.label.startswith("right_")
        assert left.label == right.label.replace("right_", "left_")


def test_skeleton_edges_form_a_tree_over_all_keypoints():
    # 19 nodes, 18 edges, connected => tree
    assert len(SKELETON_EDGES) == 18
    nodes = {k for edge in SKELETON_EDGES for k in edge}
    assert nodes == set(KEYPOINTS)
    seen = {KEYPOINTS[0]}
    frontier = [KEYPOINTS[0]]
    adjacency = {}
    for a, b in SKELETON_EDGES:
        adjacency.setdefault(a, []).append(b)
        adjacency.setdefault(b, []).append(a)
    while frontier:
        current = frontier.pop()
        for neighbor in adjacency[current]:
            if neighbor not in seen:
                seen.add(neighbor)
                frontier.append(neighbor)
    assert seen == set(KEYPOINTS)
