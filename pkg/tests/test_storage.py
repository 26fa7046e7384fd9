import json
import re
import struct

import numpy as np
import pytest

from app.core.errors import ConfigurationError, IntegrityError
from app.core.integrity import DIGEST_SIZE, seal
from app.schemas.results import ResultsRow
from app.schemas.run import RunConfig
from app.schemas.train import BaselineVariant, NetworkConfig, TrainConfig
from app.services.mappo import AgentTeam
from app.storage.checkpoint import decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint
from app.storage.config_io import (
    build_run_config,
    dump_run_config,
    dumps_run_config,
    load_run_config,
    parse_override,
)
from app.storage.tables import RESULTS_SCHEMA, TableWriter, read_table, write_table
from app.storage.traces import TraceWriter, read_trace


def _run_config(variant=BaselineVariant.OURS, **network) -> RunConfig:
    train = TrainConfig(network=NetworkConfig(actor_hidden=(6,), critic_hidden=(5,), **network))
    return RunConfig(variant=variant, seeds=[0], train=train)


def _team(run_config: RunConfig) -> AgentTeam:
    team = AgentTeam.create(run_config.variant, run_config.train, seed=3)
    team.actor_norm.update(np.random.default_rng(0).normal(size=(10, team.actor_norm.dim)))
    return team


def _row(**kw) -> ResultsRow:
    base = dict(
        variant="ours",
        variation="nominal",
        success_rate=0.5,
        position_error_mean_m=0.04,
        position_error_sample_variance_m2=1e-4,
        n_episodes=10,
        seed=0,
    )
    return ResultsRow(**{**base, **kw})


# ---------- checkpoints ----------

def test_checkpoint_round_trip_preserves_policy(tmp_path):
    run_config = _run_config()
    team = _team(run_config)
    path = save_checkpoint(tmp_path / "a.cgck", team, run_config, iteration=7)
    restored = load_checkpoint(path)

    assert restored.iteration == 7 and restored.variant is BaselineVariant.OURS
    assert restored.run_config == run_config
    x = np.random.default_rng(1).normal(size=(2, 18))
    a, _ = team.act(x, None, deterministic=True)
    b, _ = restored.team.act(x, None, deterministic=True)
    assert np.allclose(a, b, atol=1e-5)
    assert restored.team.actor_norm.count == team.actor_norm.count


def test_shared_weights_are_restored_shared(tmp_path):
    run_config = _run_config(share_weights=True)
    restored = decode_checkpoint(encode_checkpoint(_team(run_config), run_config, 1))
    assert restored.team.actors[0] is restored.team.actors[1]
    assert restored.team.critics[0] is restored.team.critics[1]


@pytest.mark.parametrize("cut", [1, 40, 200])
def test_truncated_checkpoint_is_rejected(cut):
    run_config = _run_config()
    data = encode_checkpoint(_team(run_config), run_config, 1)
    with pytest.raises(IntegrityError):
        decode_checkpoint(data[:-cut])


def test_flipped_byte_is_rejected():
    run_config = _run_config()
    data = bytearray(encode_checkpoint(_team(run_config), run_config, 1))
    data[len(data) // 2] ^= 0xFF
    pattern = r"digest mismatch over \d+ payload bytes \(stored [0-9a-f]{16}, computed [0-9a-f]{16}\)"
    with pytest.raises(IntegrityError, match=pattern):
        decode_checkpoint(bytes(data))


def test_file_shorter_than_digest_reports_its_size():
    with pytest.raises(IntegrityError, match="12 bytes, shorter than the 32-byte digest"):
        decode_checkpoint(b"CGCK" + bytes(8))


def _resealed(edit) -> bytes:
    """A checkpoint whose payload was edited and then sealed again."""
    run_config = _run_config()
    payload = bytearray(encode_checkpoint(_team(run_config), run_config, 1)[:-DIGEST_SIZE])
    return seal(bytes(edit(payload)))


def test_foreign_magic_names_expected_and_found():
    data = _resealed(lambda p: b"ZZZZ" + p[4:])
    with pytest.raises(IntegrityError, match=r"magic expected b.CGCK., found b.ZZZZ."):
        decode_checkpoint(data)


def test_newer_version_names_expected_and_found():
    data = _resealed(lambda p: p[:4] + struct.pack("<H", 7) + p[6:])
    with pytest.raises(IntegrityError, match=r"version \(expected 1, found 7\)"):
        decode_checkpoint(data)


def test_header_dims_must_match_networks():
    def edit(payload):
        _, _, length = struct.unpack_from("<4sHI", payload, 0)
        header = json.loads(payload[10 : 10 + length])
        header["critic_dims"] = [[44, 99, 1], [44, 99, 1]]
        body = json.dumps(header, sort_keys=True).encode()
        return payload[:4] + struct.pack("<HI", 1, len(body)) + body + payload[10 + length :]

    expected = re.escape("critic dims expected [[44, 99, 1], [44, 99, 1]] from header, found [[44, 5, 1], [44, 5, 1]]")
    with pytest.raises(IntegrityError, match=expected):
        decode_checkpoint(_resealed(edit))


def test_missing_checkpoint_names_the_path(tmp_path):
    with pytest.raises(IntegrityError, match="nope.cgck"):
        load_checkpoint(tmp_path / "nope.cgck")


def test_save_leaves_no_temporary_file(tmp_path):
    run_config = _run_config()
    save_checkpoint(tmp_path / "ck" / "final.cgck", _team(run_config), run_config, 1)
    assert [p.name for p in (tmp_path / "ck").iterdir()] == ["final.cgck"]


# ---------- tables ----------

def test_table_starts_with_schema_line(tmp_path):
    path = write_table(tmp_path / "r.csv", RESULTS_SCHEMA, ResultsRow, [_row(), _row(seed=1)])
    lines = path.read_text().splitlines()
    assert lines[0] == "# schema: coopgrasp.results/1.0"
    assert lines[1].startswith("variant,variation,success_rate")
    rows = read_table(path, RESULTS_SCHEMA, ResultsRow)
    assert [r.seed for r in rows] == [0, 1]


def test_minor_version_bump_is_readable(tmp_path):
    path = write_table(tmp_path / "r.csv", "coopgrasp.results/1.3", ResultsRow, [_row()])
    assert len(read_table(path, RESULTS_SCHEMA, ResultsRow)) == 1


@pytest.mark.parametrize("schema", ["coopgrasp.results/2.0", "coopgrasp.metrics/1.0"])
def test_incompatible_schema_is_rejected(tmp_path, schema):
    path = write_table(tmp_path / "r.csv", schema, ResultsRow, [_row()])
    with pytest.raises(IntegrityError):
        read_table(path, RESULTS_SCHEMA, ResultsRow)


def test_missing_schema_line_is_rejected(tmp_path):
    path = tmp_path / "plain.csv"
    path.write_text("variant,variation\nours,nominal\n")
    with pytest.raises(IntegrityError, match="missing schema"):
        read_table(path, RESULTS_SCHEMA, ResultsRow)


def test_rows_are_flushed_as_written(tmp_path):
    path = tmp_path / "live.csv"
    with TableWriter(path, RESULTS_SCHEMA, ResultsRow) as writer:
        writer.write(_row())
        assert len(path.read_text().splitlines()) == 3


# ---------- traces ----------

def test_trace_header_comes_first(tmp_path):
    with TraceWriter(tmp_path / "t.jsonl", {"seed": 4}) as trace:
        trace.write({"t": 1})
        trace.write({"t": 2})
    header, records = read_trace(tmp_path / "t.jsonl")
    assert header["schema"] == "coopgrasp.trace/1.0" and header["seed"] == 4
    assert [r["t"] for r in records] == [1, 2]


def test_non_trace_file_is_rejected(tmp_path):
    path = tmp_path / "x.jsonl"
    path.write_text('{"t": 1}\n')
    with pytest.raises(IntegrityError):
        read_trace(path)


# ---------- config files ----------

@pytest.mark.parametrize(
    "item,expected",
    [
        ("train.actor_lr=1e-3", (["train", "actor_lr"], 1e-3)),
        ("seeds=[1, 2]", (["seeds"], [1, 2])),
        ("variant=noforce", (["variant"], "noforce")),
        ("task.horizon = 50", (["task", "horizon"], 50)),
    ],
)
def test_parse_override(item, expected):
    assert parse_override(item) == expected


def test_override_without_equals_is_rejected():
    with pytest.raises(ConfigurationError):
        parse_override("train.actor_lr")


def test_overrides_merge_into_nested_sections():
    config = build_run_config({"train": {"epochs": 2}}, ["train.minibatches=4", "world.gravity=1.62"])
    assert config.train.epochs == 2 and config.train.minibatches == 4
    assert config.world.gravity == pytest.approx(1.62)


def test_unknown_key_is_named():
    with pytest.raises(ConfigurationError, match="train.learning_rate"):
        build_run_config({"train": {"learning_rate": 0.1}})


def test_missing_config_names_the_path(tmp_path):
    with pytest.raises(ConfigurationError, match="absent.toml"):
        load_run_config(tmp_path / "absent.toml")


def test_bad_toml_is_a_configuration_error(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text("[train\nepochs = 1\n")
    with pytest.raises(ConfigurationError):
        load_run_config(path)


def test_resolved_config_reloads_identically(tmp_path, tiny_config_file):
    config = load_run_config(tiny_config_file("ternary"), ["train.actor_lr=0.002"])
    dump_run_config(config, tmp_path / "resolved.toml")
    assert load_run_config(tmp_path / "resolved.toml") == config
    assert "ternary" in dumps_run_config(config)
