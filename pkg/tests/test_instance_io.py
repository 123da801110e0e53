import json

import pytest

from dagspeed import SpeedModel, Task, TaskGraph, load_instance, save_instance, validate
from dagspeed.instance_io import (
    InstanceFormatError,
    instance_to_dict,
    load_schedule_dict,
    loads_instance,
)

GOOD = {
    "alpha": 3.0,
    "deadline": 2.0,
    "cores": 4,
    "speeds": {"kind": "discrete", "levels": [0.25, 0.5, 1.0]},
    "tasks": [
        {"id": "t1", "weight": 1.5, "core": 0},
        {"id": "t2", "weight": 1.0, "core": 1},
    ],
    "edges": [["t1", "t2"]],
}


def test_roundtrip(tmp_path):
    g = loads_instance(json.dumps(GOOD))
    assert g.n == 2 and g.cores == 4
    assert g.speed_model.kind == "discrete"
    assert g.speed_model.alpha == 3.0
    assert g.deadline == 2.0
    path = tmp_path / "inst.json"
    save_instance(g, path)
    g2 = load_instance(path)
    assert instance_to_dict(g) == instance_to_dict(g2)


def test_continuous_speeds():
    doc = dict(GOOD, speeds={"kind": "continuous", "min": 0.1, "max": 2.0})
    g = loads_instance(json.dumps(doc))
    assert (g.speed_model.s_min, g.speed_model.s_max) == (0.1, 2.0)


@pytest.mark.parametrize(
    "mutate",
    [
        lambda d: d.update(typo_field=1),
        lambda d: d["tasks"][0].update(unexpected=2),
        lambda d: d["speeds"].update(extra=3),
        lambda d: d.pop("deadline"),
        lambda d: d.update(edges=[["t1"]]),
        lambda d: d.update(tasks=[{"id": 7, "weight": 1.0}]),
        lambda d: d.update(speeds={"kind": "discrete", "levels": []}),
        lambda d: d.update(speeds={"kind": "warp", "levels": [1]}),
    ],
)
def test_strict_rejection(mutate):
    doc = json.loads(json.dumps(GOOD))
    mutate(doc)
    with pytest.raises(InstanceFormatError):
        loads_instance(json.dumps(doc))


def test_core_order_applied_as_chain_edges():
    doc = {
        "alpha": 3.0,
        "deadline": 5.0,
        "cores": 2,
        "speeds": {"kind": "continuous", "min": 0.1, "max": 2.0},
        "tasks": [
            {"id": "a", "weight": 1.0},
            {"id": "b", "weight": 1.0},
            {"id": "c", "weight": 1.0},
        ],
        "edges": [],
        "core_order": {"0": ["a", "c"], "1": ["b"]},
    }
    g = loads_instance(json.dumps(doc))
    assert ("a", "c") in g.edges
    assert g.is_mapping_instance
    assert g.task_by_id("b").mapped_core == 1
    assert validate(g) == []


def test_core_order_conflicting_core_field():
    doc = {
        "alpha": 3.0,
        "deadline": 5.0,
        "cores": 2,
        "speeds": {"kind": "continuous", "min": 0.1, "max": 2.0},
        "tasks": [{"id": "a", "weight": 1.0, "core": 1}],
        "edges": [],
        "core_order": {"0": ["a"]},
    }
    with pytest.raises(InstanceFormatError):
        loads_instance(json.dumps(doc))


def test_mixed_mapping_surfaces_in_validate():
    doc = json.loads(json.dumps(GOOD))
    del doc["tasks"][1]["core"]
    g = loads_instance(json.dumps(doc))
    assert any(v.code == "MixedMapping" for v in validate(g))


def test_schedule_document_roundtrip(tmp_path):
    doc = {
        "makespan": 2.0,
        "tasks": {"a": {"core": 0, "start": 0.0, "speed": 1.0}},
    }
    p = tmp_path / "sched.json"
    p.write_text(json.dumps(doc))
    assert load_schedule_dict(p)["tasks"]["a"]["speed"] == 1.0
    p.write_text(json.dumps({"makespan": 1, "tasks": {"a": {"core": 0}}}))
    with pytest.raises(InstanceFormatError):
        load_schedule_dict(p)
