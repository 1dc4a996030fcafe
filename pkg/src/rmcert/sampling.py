"""Shot-data generation for randomized local measurements.

Settings are drawn uniformly (cos(theta) ~ U[-1,1], phi ~ U[0, 2pi) per
qubit) and measured K times each.  Every setting owns a counter-based
Philox stream keyed by (seed, setting_id), so records are bit-identical
regardless of the order or parallelism in which settings are evaluated.

Measurement paths:

* dense -- all 2^n outcome probabilities, for explicit states (n <= 14);
* chain -- the GHZ state is a rank-2 superposition, so outcomes can be
  sampled qubit by qubit with a two-amplitude boundary vector (O(n) per
  shot, usable far beyond dense reach); the noisy-GHZ mixture draws the
  white-noise branch first;
* compact -- when only the correlation sample X = prod r_i is needed,
  its +1 count is Binomial(K, (1+E)/2) with the analytic E, no
  per-outcome sampling at all.

Record files are line-delimited JSON: one header object followed by one
object per setting.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import IngestionError, ResourceLimitError, ValidationError
from .moments import correlation, validate_directions
from .states import (
    SINGLE,
    BlockProduct,
    DenseState,
    NoisyGhz,
    StateModel,
    state_descriptor,
)

FILE_VERSION = 1
MODE_COMPACT = "compact"
MODE_FULL = "full"
MAX_DENSE_SAMPLING_QUBITS = 14


@dataclass(frozen=True)
class MeasurementSetting:
    setting_id: int
    directions: np.ndarray  # (n, 3)

    def __post_init__(self):
        dirs = validate_directions(self.directions)
        dirs.setflags(write=False)
        object.__setattr__(self, "directions", dirs)

    @property
    def n_qubits(self) -> int:
        return self.directions.shape[0]


@dataclass(frozen=True)
class ShotRecord:
    setting: MeasurementSetting
    k_shots: int
    mode: str
    x_count: int | None = None
    outcomes: np.ndarray | None = None  # (K, n) of +-1, full mode only

    def __post_init__(self):
        if self.mode not in (MODE_COMPACT, MODE_FULL):
            raise ValidationError(f"unknown record mode {self.mode!r}")
        if self.k_shots < 1:
            raise ValidationError("k_shots must be >= 1")
        if self.mode == MODE_COMPACT:
            if self.outcomes is not None:
                raise ValidationError("compact records carry no outcome tuples")
            if self.x_count is None or not (0 <= self.x_count <= self.k_shots):
                raise ValidationError("compact records need x_count in 0..K")
        else:
            arr = np.asarray(self.outcomes, dtype=np.int8)
            if arr.shape != (self.k_shots, self.setting.n_qubits):
                raise ValidationError(
                    f"outcomes must be (K, n) = ({self.k_shots}, {self.setting.n_qubits}), "
                    f"got {arr.shape}"
                )
            if not np.all(np.isin(arr, (-1, 1))):
                raise ValidationError("outcomes must be +-1")
            arr.setflags(write=False)
            object.__setattr__(self, "outcomes", arr)
            derived = int(np.sum(np.prod(arr, axis=1) == 1))
            if self.x_count is None:
                object.__setattr__(self, "x_count", derived)
            elif self.x_count != derived:
                raise ValidationError(
                    f"x_count={self.x_count} does not match the outcome tuples ({derived})"
                )


def setting_stream(seed: int, setting_id: int) -> np.random.Generator:
    """Independent, order-invariant RNG stream for one setting."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(setting_id)]))


def sample_setting(n: int, rng: np.random.Generator, setting_id: int = 0) -> MeasurementSetting:
    """n independent uniformly random measurement directions."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    z = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    st = np.sqrt(1.0 - z * z)
    dirs = np.stack([st * np.cos(phi), st * np.sin(phi), z], axis=1)
    return MeasurementSetting(setting_id=setting_id, directions=dirs)


def _eig_spinors(d: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(+1, -1) eigenvectors of sigma_u for direction d."""
    z = min(1.0, max(-1.0, float(d[2])))
    c = math.sqrt((1.0 + z) / 2.0)
    s = math.sqrt((1.0 - z) / 2.0)
    ph = math.atan2(float(d[1]), float(d[0]))
    e = complex(math.cos(ph), math.sin(ph))
    up = np.array([c, s * e])
    dn = np.array([-s / e, c])
    return up, dn


def _chain_sample_ghz(dirs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One GHZ outcome tuple via the two-amplitude boundary recursion.

    The post-measurement state after any prefix of local projections
    stays in span{|0...0>, |1...1>}; only the final qubit sees the
    interference cross term.
    """
    n = dirs.shape[0]
    a = b = 1.0 / math.sqrt(2.0)
    out = np.empty(n, dtype=np.int8)
    for j in range(n):
        up, dn = _eig_spinors(dirs[j])
        if j < n - 1:
            p_plus = abs(a * up[0].conjugate()) ** 2 + abs(b * up[1].conjugate()) ** 2
        else:
            p_plus = abs(a * up[0].conjugate() + b * up[1].conjugate()) ** 2
        if rng.random() < p_plus:
            out[j] = 1
            a, b = a * up[0].conjugate(), b * up[1].conjugate()
        else:
            out[j] = -1
            a, b = a * dn[0].conjugate(), b * dn[1].conjugate()
        norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if norm > 0.0:
            a, b = a / norm, b / norm
    return out


def _dense_outcome_probs(state: DenseState, dirs: np.ndarray) -> np.ndarray:
    """Born probabilities of all 2^n outcome tuples (bit 0 <-> r = +1)."""
    n = state.n_qubits
    rows = []
    for j in range(n):
        up, dn = _eig_spinors(dirs[j])
        rows.append(np.stack([up.conj(), dn.conj()]))
    if state.is_pure:
        v = state.data.reshape((2,) * n)
        for j, u in enumerate(rows):
            v = np.moveaxis(np.tensordot(u, v, axes=([1], [j])), 0, j)
        p = np.abs(v.reshape(-1)) ** 2
    else:
        m = state.data.reshape((2,) * (2 * n))
        for j, u in enumerate(rows):
            m = np.moveaxis(np.tensordot(u, m, axes=([1], [j])), 0, j)
            m = np.moveaxis(np.tensordot(u.conj(), m, axes=([1], [n + j])), 0, n + j)
        p = np.real(np.diag(m.reshape(2 ** n, 2 ** n))).copy()
    p = np.maximum(p, 0.0)
    return p / p.sum()


def _bits_to_outcomes(indices: np.ndarray, n: int) -> np.ndarray:
    bits = (indices[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _full_outcomes(state: StateModel, dirs: np.ndarray, K: int,
                   rng: np.random.Generator) -> np.ndarray:
    n = dirs.shape[0]
    if isinstance(state, NoisyGhz):
        out = np.empty((K, n), dtype=np.int8)
        for i in range(K):
            if state.p > 0.0 and rng.random() < state.p:
                out[i] = rng.choice(np.array([-1, 1], dtype=np.int8), size=n)
            else:
                out[i] = _chain_sample_ghz(dirs, rng)
        return out
    if isinstance(state, BlockProduct):
        out = np.empty((K, n), dtype=np.int8)
        pos = 0
        for kind, size in state.blocks:
            block = dirs[pos : pos + size]
            if kind == SINGLE:
                p_plus = (1.0 + float(block[0, 2])) / 2.0
                r = np.where(rng.random(K) < p_plus, 1, -1).astype(np.int8)
                out[:, pos] = r
            else:
                for i in range(K):
                    out[i, pos : pos + size] = _chain_sample_ghz(block, rng)
            pos += size
        return out
    if state.n_qubits > MAX_DENSE_SAMPLING_QUBITS:
        raise ResourceLimitError(
            f"dense outcome sampling is capped at n={MAX_DENSE_SAMPLING_QUBITS}, "
            f"got n={state.n_qubits}"
        )
    probs = _dense_outcome_probs(state, dirs)
    idx = rng.choice(probs.size, size=K, p=probs)
    return _bits_to_outcomes(idx, n)


def sample_shots(state: StateModel, setting: MeasurementSetting, K: int,
                 rng: np.random.Generator, mode: str = MODE_COMPACT) -> ShotRecord:
    """K Born-rule measurements of the state in one setting."""
    if K < 1:
        raise ValidationError("K must be >= 1")
    if setting.n_qubits != state.n_qubits:
        raise ValidationError(
            f"setting has {setting.n_qubits} directions for an "
            f"{state.n_qubits}-qubit state"
        )
    if mode == MODE_COMPACT:
        e = correlation(state, setting.directions)
        p_plus = min(1.0, max(0.0, (1.0 + e) / 2.0))
        y = int(rng.binomial(K, p_plus))
        return ShotRecord(setting=setting, k_shots=K, mode=mode, x_count=y)
    if mode != MODE_FULL:
        raise ValidationError(f"unknown sampling mode {mode!r}")
    outcomes = _full_outcomes(state, setting.directions, K, rng)
    return ShotRecord(setting=setting, k_shots=K, mode=mode, outcomes=outcomes)


def run_experiment(state: StateModel, M: int, K: int, seed: int,
                   mode: str = MODE_COMPACT, threads: int = 1) -> list[ShotRecord]:
    """M settings x K shots with per-setting keyed streams.

    The same (state, M, K, seed, mode) always produces the same records,
    independently of ``threads``.
    """
    if M < 1:
        raise ValidationError("M must be >= 1")
    n = state.n_qubits

    def one(setting_id: int) -> ShotRecord:
        rng = setting_stream(seed, setting_id)
        setting = sample_setting(n, rng, setting_id=setting_id)
        return sample_shots(state, setting, K, rng, mode)

    if threads <= 1:
        return [one(i) for i in range(M)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(M)))


# ---------------------------------------------------------------------------
# record file format (line-delimited JSON)


def _float_list(arr: np.ndarray) -> list:
    return [[float(x) for x in row] for row in arr]


def write_records(path, records, state_desc: str, seed: int) -> None:
    """Write a header line plus one line per setting."""
    records = list(records)
    if not records:
        raise ValidationError("cannot write an empty record file")
    first = records[0]
    header = {
        "version": FILE_VERSION,
        "n_qubits": first.setting.n_qubits,
        "k_shots": first.k_shots,
        "mode": first.mode,
        "seed": int(seed),
        "state_descriptor": state_desc,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header) + "\n")
        for rec in records:
            if rec.k_shots != first.k_shots or rec.mode != first.mode:
                raise ValidationError("all records in a file share one K and one mode")
            row = {
                "setting_id": rec.setting.setting_id,
                "bloch": _float_list(rec.setting.directions),
            }
            if rec.mode == MODE_COMPACT:
                row["x_count"] = int(rec.x_count)
                row["k"] = rec.k_shots
            else:
                row["outcomes"] = [[int(v) for v in shot] for shot in rec.outcomes]
            fh.write(json.dumps(row) + "\n")


def read_records(path) -> tuple[dict, list[ShotRecord]]:
    """Parse a record file; raises IngestionError with the line number."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise IngestionError("empty record file", line=1)
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise IngestionError(f"bad header: {exc}", line=1) from None
    for key in ("version", "n_qubits", "k_shots", "mode", "seed", "state_descriptor"):
        if key not in header:
            raise IngestionError(f"header missing field {key!r}", line=1)
    if header["version"] != FILE_VERSION:
        raise IngestionError(f"unsupported file version {header['version']!r}", line=1)
    n = int(header["n_qubits"])
    K = int(header["k_shots"])
    mode = header["mode"]
    records = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            row = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise IngestionError(f"bad record: {exc}", line=lineno) from None
        try:
            setting = MeasurementSetting(
                setting_id=int(row["setting_id"]),
                directions=np.array(row["bloch"], dtype=float),
            )
            if mode == MODE_COMPACT:
                if int(row["k"]) != K:
                    raise ValidationError(f"record K={row['k']} != header K={K}")
                rec = ShotRecord(setting=setting, k_shots=K, mode=mode,
                                 x_count=int(row["x_count"]))
            else:
                rec = ShotRecord(setting=setting, k_shots=K, mode=mode,
                                 outcomes=np.array(row["outcomes"], dtype=np.int8))
            if setting.n_qubits != n:
                raise ValidationError(f"record has {setting.n_qubits} qubits, header says {n}")
        except (KeyError, ValidationError, ValueError) as exc:
            msg = exc.args[0] if exc.args else str(exc)
            raise IngestionError(str(msg), line=lineno) from None
        records.append(rec)
    if not records:
        raise IngestionError("record file has a header but no records", line=2)
    return header, records


def simulate_to_file(state: StateModel, M: int, K: int, seed: int, path,
                     mode: str = MODE_COMPACT, threads: int = 1) -> None:
    records = run_experiment(state, M, K, seed, mode=mode, threads=threads)
    write_records(path, records, state_descriptor(state), seed)
