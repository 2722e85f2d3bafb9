import hashlib
import io

import pytest

from eqasim.dataio import (DataFormatError, QAItem, canonical_dumps,
                           convert_external_item, qa_from_dict, qa_to_dict, read_qa,
                           read_trace, rle_decode, rle_encode, traj_from_dict,
                           traj_to_dict, trace_to_text, write_qa)
from eqasim.episode import EpisodeResult, StepRecord
from eqasim.scene import AtomicAction, Pose, TrajectorySpec


def _qa(**overrides):
    fields = dict(
        id="q1", question="Is there a mug?", gold_answer="yes",
        question_type="existence", scene="s1",
        start=Pose(0.125, 0.375, 30.0), target=(1.125, 0.875),
        gt_step_count=12, gt_geodesic_m=2.5)
    fields.update(overrides)
    return QAItem(**fields)


def _result():
    records = [
        StepRecord(step=0, pose=(0.125, 0.125, 0.0), mode="frontier",
                   event="relocate", waypoint=(2, 0),
                   path=[(0.125, 0.125), (0.375, 0.125), (0.625, 0.125)],
                   oracle_calls=[{"call": "should_stop", "digest": "abc123"}],
                   p_m=0.5),
        StepRecord(step=1, pose=(0.625, 0.125, 0.0), mode="goal:2",
                   event="stop", waypoint=None, path=[(0.625, 0.125)],
                   oracle_calls=[], p_m=0.5),
    ]
    return EpisodeResult(
        scene_name="s1", qa_id="q1", strategy="fineqa", seed=7,
        status="completed", answer="yes", final_pose=(0.625, 0.125, 0.0),
        p_m=0.5, steps=2, records=records,
        maps={"width": 1, "height": 1, "exploration": [[1, 1]],
              "semantic": [[1, 0.0]],
              "regions": {"ids": [[1, 0]], "table": {}},
              "masked": {"region_id": None, "values": [[1, 0.0]]}},
        final_payload={"question": "Is there a mug?", "pose": [0.625, 0.125, 0.0],
                       "sample_cells": [], "visible_region_counts": {},
                       "visible_free_count": 0, "region_rep_cells": {},
                       "sample_region_types": [], "target_visible": True})


# -- QA items -------------------------------------------------------------------------

def test_qa_empty_file():
    assert read_qa("") == []


def test_qa_round_trip_identity():
    items = [_qa(), _qa(id="q2", question_type="counting",
                       extras={"note": "x", "alpha": 1})]
    buf = io.StringIO()
    write_qa(items, buf)
    again = read_qa(buf.getvalue())
    assert again == items
    buf2 = io.StringIO()
    write_qa(again, buf2)
    assert buf2.getvalue() == buf.getvalue()  # canonical bytes stable


def test_qa_unknown_fields_preserved():
    line = canonical_dumps({**qa_to_dict(_qa()), "custom_tag": "keep-me"})
    items = read_qa(line + "\n")
    assert items[0].extras == {"custom_tag": "keep-me"}
    out = io.StringIO()
    write_qa(items, out)
    assert "keep-me" in out.getvalue()


def test_qa_invalid_question_type_rejected():
    data = qa_to_dict(_qa())
    data["question_type"] = "color"
    with pytest.raises(DataFormatError, match="state, knowledge, location"):
        qa_from_dict(data, 1)


def test_qa_parse_error_carries_line_number():
    good = canonical_dumps(qa_to_dict(_qa()))
    with pytest.raises(DataFormatError, match="line 2"):
        read_qa(good + "\n{broken\n")


def test_qa_rejects_nan():
    text = good = canonical_dumps(qa_to_dict(_qa())).replace("2.5", "NaN")
    with pytest.raises(DataFormatError, match="non-finite"):
        read_qa(text + "\n")


def test_qa_rejects_infinite_distance():
    data = qa_to_dict(_qa())
    data["gt_geodesic_m"] = 1e400  # serializes as Infinity; build dict directly
    with pytest.raises(DataFormatError, match="finite"):
        qa_from_dict(data, 3)


def test_convert_external_record_aliases_and_extras():
    record = {
        "question": "Is the lamp on?", "answer": "no", "type": "state",
        "scene_id": "apt-3", "start": {"x": 1.0, "y": 2.0, "heading": 90.0},
        "target": {"x": 3.0, "y": 4.0}, "steps": 25, "geodesic": 4.5,
        "track": 7,
    }
    item = convert_external_item(record)
    assert item.scene == "apt-3" and item.question_type == "state"
    assert item.gt_step_count == 25 and item.gt_geodesic_m == 4.5
    assert item.extras == {"track": 7}
    assert convert_external_item(record, scene="override").scene == "override"


def test_convert_external_record_missing_field():
    with pytest.raises(DataFormatError, match="missing 'answer'"):
        convert_external_item({"question": "q", "type": "state", "scene": "s",
                               "start": {"x": 0, "y": 0, "heading": 0},
                               "target": {"x": 0, "y": 0},
                               "steps": 10, "geodesic": 1.0})


# -- trajectories ----------------------------------------------------------------------

def test_traj_round_trip():
    spec = TrajectorySpec(
        start=Pose(0.125, 0.125, 0.0), target=(1.375, 0.875),
        actions=(AtomicAction.MOVE_FORWARD, AtomicAction.TURN_LEFT,
                 AtomicAction.MOVE_FORWARD, AtomicAction.TURN_RIGHT),
        step_count=4, geodesic_length=1.25)
    scene_name, again = traj_from_dict(traj_to_dict(spec, "s9"))
    assert scene_name == "s9"
    assert again == spec
    assert traj_to_dict(spec, "s9")["actions"] == "FLFR"


# -- traces -----------------------------------------------------------------------------

def test_trace_round_trip_single_step():
    result = _result()
    text = trace_to_text(result)
    again = read_trace(text)
    assert trace_to_text(again) == text
    assert again.steps == 2 and again.answer == "yes"
    assert again.records[0].waypoint == (2, 0)
    assert again.records[1].mode == "goal:2"


def test_trace_hash_stable_across_serializations():
    a = hashlib.sha256(trace_to_text(_result()).encode()).hexdigest()
    b = hashlib.sha256(trace_to_text(read_trace(trace_to_text(_result()))).encode()).hexdigest()
    assert a == b


def test_trace_truncation_detected():
    lines = trace_to_text(_result()).splitlines()
    without_end = "\n".join(lines[:-1]) + "\n"
    with pytest.raises(DataFormatError, match="truncated"):
        read_trace(without_end)
    wrong_count = "\n".join(lines[:-1] + ['{"trace_end":5}']) + "\n"
    with pytest.raises(DataFormatError, match="truncated"):
        read_trace(wrong_count)


def test_trace_rejects_non_finite_pose():
    text = trace_to_text(_result()).replace('"p_m":0.5', '"p_m":Infinity', 1)
    with pytest.raises(DataFormatError, match="non-finite"):
        read_trace(text)


# -- RLE --------------------------------------------------------------------------------

def test_rle_round_trip():
    data = [0, 0, 0, 1, 1, 2, 0.5, 0.5, 0.5, 0.5]
    runs = rle_encode(data)
    assert runs == [[3, 0], [2, 1], [1, 2], [4, 0.5]]
    assert rle_decode(runs, len(data)) == data


def test_rle_length_mismatch():
    with pytest.raises(DataFormatError, match="cells"):
        rle_decode([[2, 1]], 3)
