"""Checkpoint files: a JSON header plus four serialized networks, sealed with a digest.

Layout: magic "CGCK", u16 format version, u32 header length, UTF-8 JSON header
(variant, network dims, normalizer state, run config, iteration), then for each of
actor 0, actor 1, critic 0, critic 1 a u32 length and the network blob. The whole
payload is followed by its SHA-256 digest.
"""
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

from pydantic import ValidationError

from app.core.errors import IntegrityError
from app.core.integrity import DIGEST_SIZE, digest, seal, unseal
from app.schemas.run import RunConfig
from app.schemas.train import BaselineVariant
from app.services.mappo import Actor, AgentTeam, Critic, ObservationNormalizer
from app.services.neural import GaussianHead, deserialize_mlp, serialize_mlp

logger = logging.getLogger(__name__)

MAGIC = b"CGCK"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sHI")
_U32 = struct.Struct("<I")


@dataclass
class Checkpoint:
    team: AgentTeam
    run_config: RunConfig
    iteration: int

    @property
    def variant(self) -> BaselineVariant:
        return self.team.variant


def encode_checkpoint(team: AgentTeam, run_config: RunConfig, iteration: int) -> bytes:
    header = {
        "variant": team.variant.value,
        "iteration": iteration,
        "env_steps": iteration * run_config.train.batch_size,
        "actor_dims": [list(a.net.dims) for a in team.actors],
        "critic_dims": [list(c.net.dims) for c in team.critics],
        "actor_normalizer": team.actor_norm.state_dict(),
        "critic_normalizer": team.critic_norm.state_dict(),
        "run_config": run_config.model_dump(mode="json"),
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blobs = [serialize_mlp(a.net, a.head.log_std) for a in team.actors]
    blobs += [serialize_mlp(c.net) for c in team.critics]
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header_bytes)), header_bytes]
    for blob in blobs:
        parts.extend((_U32.pack(len(blob)), blob))
    return seal(b"".join(parts))


def _seal_mismatch(data: bytes) -> str:
    if len(data) < DIGEST_SIZE:
        return f"truncated file ({len(data)} bytes, shorter than the {DIGEST_SIZE}-byte digest)"
    payload, stored = data[:-DIGEST_SIZE], data[-DIGEST_SIZE:]
    return (
        f"digest mismatch over {len(payload)} payload bytes "
        f"(stored {stored.hex()[:16]}, computed {digest(payload).hex()[:16]}); file truncated or corrupted"
    )


def decode_checkpoint(data: bytes, source: str = "checkpoint") -> Checkpoint:
    payload = unseal(data)
    if payload is None:
        raise IntegrityError(f"{source}: {_seal_mismatch(data)}")
    try:
        magic, version, header_len = _PREFIX.unpack_from(payload, 0)
    except struct.error as exc:
        raise IntegrityError(f"{source}: too short for a checkpoint header") from exc
    if magic != MAGIC:
        raise IntegrityError(f"{source}: not a checkpoint (magic expected {MAGIC!r}, found {magic!r})")
    if version != FORMAT_VERSION:
        raise IntegrityError(f"{source}: unsupported checkpoint version (expected {FORMAT_VERSION}, found {version})")

    offset = _PREFIX.size
    try:
        header = json.loads(payload[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise IntegrityError(f"{source}: unreadable header") from exc
    offset += header_len

    blobs = []
    for _ in range(4):
        try:
            (size,) = _U32.unpack_from(payload, offset)
        except struct.error as exc:
            raise IntegrityError(f"{source}: truncated network section") from exc
        offset += _U32.size
        blobs.append(payload[offset : offset + size])
        offset += size
    if offset != len(payload):
        raise IntegrityError(f"{source}: {len(payload) - offset} trailing bytes")

    try:
        run_config = RunConfig.model_validate(header["run_config"])
        variant = BaselineVariant(header["variant"])
    except (KeyError, ValueError, ValidationError) as exc:
        raise IntegrityError(f"{source}: invalid header contents") from exc

    actors = []
    for blob in blobs[:2]:
        net, log_std = deserialize_mlp(blob)
        if log_std is None:
            raise IntegrityError(f"{source}: actor network without log_std")
        actors.append(Actor(net, GaussianHead(log_std)))
    critics = [Critic(deserialize_mlp(blob)[0]) for blob in blobs[2:]]
    for kind, nets in (("actor", [a.net for a in actors]), ("critic", [c.net for c in critics])):
        declared = header.get(f"{kind}_dims")
        found = [list(n.dims) for n in nets]
        if declared != found:
            raise IntegrityError(f"{source}: {kind} dims expected {declared} from header, found {found}")
    if run_config.train.network.share_weights:
        actors[1], critics[1] = actors[0], critics[0]

    team = AgentTeam(
        variant,
        run_config.train,
        actors,
        critics,
        ObservationNormalizer.from_state(header["actor_normalizer"]),
        ObservationNormalizer.from_state(header["critic_normalizer"]),
    )
    return Checkpoint(team=team, run_config=run_config, iteration=int(header["iteration"]))


def save_checkpoint(path: Path | str, team: AgentTeam, run_config: RunConfig, iteration: int) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode_checkpoint(team, run_config, iteration))
    tmp.replace(path)
    logger.debug("checkpoint written: %s", path)
    return path


def load_checkpoint(path: Path | str) -> Checkpoint:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError as exc:
        raise IntegrityError(f"checkpoint not found: {path}") from exc
    return decode_checkpoint(data, source=str(path))
