"""Sequential joint-typicality decoding and Monte Carlo trial simulation.

The decoder slides a length-N window over the output stream; at each slot t it
forms the empirical joint distribution of (sync word symbol, output symbol)
and declares v_hat = t the first time that distribution is within mu of the
expected joint P_hat_s(x) Q(y|x). A trial transmits the word at a uniform slot
v in {1..A} and classifies the outcome:

  Correct  v_hat == v
  E1       v_hat in {1..v-N} or v_hat > v  (false alarm away from the word)
  E2       v_hat in {v-N+1..v-1}           (false alarm on a partial overlap)
  E3       no declaration by the scan limit (miss)

For asynchronism windows too large to scan exhaustively, far windows that see
pure idle noise are skipped only when an exact binomial bound certifies that
the chance any of them fires is below CERT_SLIP; otherwise the full stream is
simulated slot by slot.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binom

from .channels import Dmc, IndexOutOfRange, sample_outputs
from .sequences import SyncWord

FULL_SIM_MAX_A = 50_000
CERT_SLIP = 1e-9
Z_95 = 1.959963984540054


class LengthMismatch(ValueError):
    pass


class StreamExhausted(RuntimeError):
    """The stream ended before the decoder could evaluate a required window."""


class SimulationInfeasible(RuntimeError):
    """A is too large for a full scan and the far-window skip cannot be certified."""


def default_mu(channel: Dmc) -> float:
    return 0.1 / channel.n_outputs


def joint_counts(word_inputs: np.ndarray, window: np.ndarray, n_inputs: int, n_outputs: int) -> np.ndarray:
    """Integer joint occurrence counts of (word symbol, output symbol)."""
    word_inputs = np.asarray(word_inputs)
    window = np.asarray(window)
    if word_inputs.shape != window.shape:
        raise LengthMismatch(
            f"window length {window.shape} does not match word length {word_inputs.shape}"
        )
    counts = np.zeros((n_inputs, n_outputs), dtype=np.int64)
    np.add.at(counts, (word_inputs, window), 1)
    return counts


def empirical_joint(word_inputs: np.ndarray, window: np.ndarray, n_inputs: int, n_outputs: int) -> np.ndarray:
    """Empirical joint distribution; entries are counts over the word length."""
    counts = joint_counts(word_inputs, window, n_inputs, n_outputs)
    return counts / counts.sum()


def typicality_distance(empirical: np.ndarray, reference: np.ndarray, norm: str = "linf") -> float:
    """Distance between joint tables: per-cell max (linf) or summed (l1) deviation."""
    empirical = np.asarray(empirical, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if empirical.shape != reference.shape:
        raise LengthMismatch(
            f"table shapes differ: {empirical.shape} vs {reference.shape}"
        )
    dev = np.abs(empirical - reference)
    if norm == "linf":
        return float(dev.max())
    if norm == "l1":
        return float(dev.sum())
    raise ValueError(f"unknown norm {norm!r} (expected 'linf' or 'l1')")


@dataclass(frozen=True)
class TypicalityDecoder:
    """Frozen decoder state: word, channel, tolerance, and the expected joint."""

    word: SyncWord
    channel: Dmc
    mu: float | None = None
    norm: str = "linf"
    active_input: int = 1
    reference: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mu = default_mu(self.channel) if self.mu is None else self.mu
        if mu <= 0.0:
            raise ValueError(f"mu must be > 0, got {mu}")
        object.__setattr__(self, "mu", float(mu))
        if self.norm not in ("linf", "l1"):
            raise ValueError(f"unknown norm {self.norm!r}")
        if not 0 <= self.active_input < self.channel.n_inputs:
            raise IndexOutOfRange(f"active input {self.active_input} out of range")
        wi = self.word_inputs
        ref = np.zeros((self.channel.n_inputs, self.channel.n_outputs))
        n = len(self.word)
        for x in np.unique(wi):
            ref[x] = np.count_nonzero(wi == x) / n * self.channel.rows[x]
        assert abs(ref.sum() - 1.0) < 1e-12
        ref.flags.writeable = False
        object.__setattr__(self, "reference", ref)

    @property
    def word_inputs(self) -> np.ndarray:
        """Word symbols mapped to channel input indices."""
        z = self.channel.zero_input
        return np.where(self.word.symbols == 1, self.active_input, z).astype(np.int64)

    def window_distance(self, window: np.ndarray) -> float:
        emp = empirical_joint(
            self.word_inputs, window, self.channel.n_inputs, self.channel.n_outputs
        )
        return typicality_distance(emp, self.reference, self.norm)


def _sliding_distances(
    word_inputs: np.ndarray,
    reference: np.ndarray,
    stream: np.ndarray,
    n_windows: int,
    norm: str,
) -> np.ndarray:
    """Distances for windows starting at stream offsets 0..n_windows-1."""
    n = len(word_inputs)
    acc = np.zeros(n_windows)
    for x in np.unique(word_inputs):
        wx = (word_inputs == x).astype(np.float64)
        for y in range(reference.shape[1]):
            ind = (stream == y).astype(np.float64)
            c = np.correlate(ind, wx, mode="valid")[:n_windows]
            dev = np.abs(c / n - reference[x, y])
            if norm == "linf":
                np.maximum(acc, dev, out=acc)
            else:
                acc += dev
    return acc


def run_decoder(decoder: TypicalityDecoder, output_stream, scan_limit: int) -> int | None:
    """First slot t <= scan_limit whose window is typical, else None.

    Sequential contract: the returned decision depends only on symbols up to
    t + N - 1. A stream shorter than needed raises StreamExhausted, unless the
    decoder fires before the missing symbols would have been read.
    """
    stream = np.asarray(output_stream, dtype=np.int64)
    n = len(decoder.word)
    if scan_limit < 1:
        raise ValueError(f"scan limit must be >= 1, got {scan_limit}")
    available = len(stream) - n + 1
    n_windows = min(scan_limit, max(available, 0))
    if n_windows > 0:
        dist = _sliding_distances(
            decoder.word_inputs, decoder.reference, stream, n_windows, decoder.norm
        )
        fired = np.nonzero(dist <= decoder.mu)[0]
        if fired.size:
            return int(fired[0]) + 1
    if available < scan_limit:
        raise StreamExhausted(
            f"stream of {len(stream)} symbols supports {max(available, 0)} windows; "
            f"scan limit is {scan_limit}"
        )
    return None


@dataclass(frozen=True)
class TrialConfig:
    """One simulated transmission setup over the asynchronism window {1..A}."""

    a: int
    word: SyncWord
    channel: Dmc
    mu: float | None = None
    norm: str = "linf"
    active_input: int = 1
    scan_limit: int | None = None  # default A + N - 1

    def __post_init__(self):
        if self.a < 1:
            raise ValueError(f"asynchronism window must be >= 1, got {self.a}")
        if self.effective_scan_limit < len(self.word):
            raise ValueError("scan limit must be at least the word length")

    @property
    def effective_scan_limit(self) -> int:
        return self.a + len(self.word) - 1 if self.scan_limit is None else self.scan_limit

    def decoder(self) -> TypicalityDecoder:
        return TypicalityDecoder(
            word=self.word,
            channel=self.channel,
            mu=self.mu,
            norm=self.norm,
            active_input=self.active_input,
        )


CLASSES = ("Correct", "E1", "E2", "E3")


@dataclass(frozen=True)
class TrialOutcome:
    v_true: int
    v_hat: int | None
    klass: str
    stop_time: int | None  # slot the decision consumed symbols up to

    def __post_init__(self):
        assert self.klass in CLASSES


def classify(v_true: int, v_hat: int | None, n: int) -> str:
    if v_hat is None:
        return "E3"
    if v_hat == v_true:
        return "Correct"
    if v_true - n + 1 <= v_hat <= v_true - 1:
        return "E2"
    return "E1"


def _noise_window_log_bound(decoder: TypicalityDecoder) -> float:
    """ln of an upper bound on P(a pure-idle window is typical).

    Uses the single most discriminating cell: under either norm, a typical
    window must have every cell count inside its mu band, so the binomial
    probability of the hardest cell bounds the whole event.
    """
    wi = decoder.word_inputs
    n = len(wi)
    z = decoder.channel.zero_input
    noise_row = decoder.channel.rows[z]
    best = 0.0
    for x in np.unique(wi):
        nx = int(np.count_nonzero(wi == x))
        for y in range(decoder.channel.n_outputs):
            ref = decoder.reference[x, y]
            q = noise_row[y]
            lo_c = math.ceil(n * (ref - decoder.mu))
            hi_c = math.floor(n * (ref + decoder.mu))
            if nx * q < lo_c:
                lb = float(binom.logsf(lo_c - 1, nx, q))
            elif nx * q > hi_c:
                lb = float(binom.logcdf(hi_c, nx, q))
            else:
                continue
            best = min(best, lb)
    return best


class TrialEngine:
    """Per-config trial runner; immutable after construction and picklable."""

    # full-mode streams up to this length get the vectorized batch path
    BATCH_MAX_STREAM = 64

    def __init__(self, config: TrialConfig, full_sim_max_a: int = FULL_SIM_MAX_A):
        self.config = config
        self.decoder = config.decoder()
        self.n = len(config.word)
        self.scan_limit = config.effective_scan_limit
        self.stream_len = self.scan_limit + self.n - 1
        self.word_inputs = self.decoder.word_inputs
        self.full_mode = config.a <= full_sim_max_a
        if not self.full_mode:
            log_bound = _noise_window_log_bound(self.decoder)
            n_far = math.log(2.0 * float(config.a) + 2.0 * self.n)
            if n_far + log_bound > math.log(CERT_SLIP):
                raise SimulationInfeasible(
                    f"A = {float(config.a):.3g} requires skipping pure-noise windows, "
                    f"but their total firing bound exp({n_far + log_bound:.1f}) "
                    f"exceeds {CERT_SLIP}"
                )

    def _draw_v(self, rng: np.random.Generator) -> int:
        u = rng.random()
        return min(int(u * float(self.config.a)) + 1, self.config.a)

    def run(self, rng: np.random.Generator) -> TrialOutcome:
        v = self._draw_v(rng)
        if self.full_mode:
            seg_lo = 1
            t_lo, t_hi = 1, self.scan_limit
        else:
            seg_lo = max(1, v - self.n + 1)
            t_lo = seg_lo
            t_hi = min(self.scan_limit, v + self.n - 1)
        seg_hi = self.stream_len if self.full_mode else min(self.stream_len, v + 2 * self.n - 2)
        x = np.full(seg_hi - seg_lo + 1, self.config.channel.zero_input, dtype=np.int64)
        word_pos = v - seg_lo
        x[word_pos : word_pos + self.n] = self.word_inputs
        stream = sample_outputs(self.config.channel, x, rng)
        n_windows = t_hi - t_lo + 1
        v_hat = None
        if n_windows > 0:
            dist = _sliding_distances(
                self.word_inputs, self.decoder.reference, stream, n_windows, self.decoder.norm
            )
            fired = np.nonzero(dist <= self.decoder.mu)[0]
            if fired.size:
                v_hat = t_lo + int(fired[0])
        klass = classify(v, v_hat, self.n)
        stop = None if v_hat is None else v_hat + self.n - 1
        return TrialOutcome(v_true=v, v_hat=v_hat, klass=klass, stop_time=stop)

    @property
    def batchable(self) -> bool:
        return self.full_mode and self.stream_len <= self.BATCH_MAX_STREAM

    def run_batch(self, master_seed: int, lo: int, hi: int) -> dict[str, int]:
        """Vectorized full-mode trials [lo, hi); draw-identical to run()."""
        assert self.batchable
        n, L, T = self.n, self.stream_len, self.scan_limit
        channel = self.config.channel
        counts = dict.fromkeys(CLASSES, 0)
        m = hi - lo
        u = np.empty((m, 1 + L))
        # reused Philox with a per-trial key reset: stream-identical to
        # trial_rng(master_seed, i).random(1 + L), an order of magnitude cheaper
        bit_gen = np.random.Philox(key=np.array([master_seed % 2**64, 0], dtype=np.uint64))
        gen = np.random.Generator(bit_gen)
        state = bit_gen.state
        for i in range(m):
            state["state"]["key"][1] = (lo + i) % 2**64
            state["state"]["counter"][:] = 0
            state["buffer_pos"] = 4
            bit_gen.state = state
            u[i] = gen.random(1 + L)
        v = np.minimum((u[:, 0] * float(self.config.a)).astype(np.int64) + 1, self.config.a)
        x = np.full((m, L), channel.zero_input, dtype=np.int64)
        cols = (v - 1)[:, None] + np.arange(n)[None, :]
        x[np.arange(m)[:, None], cols] = self.word_inputs[None, :]
        # same inverse-CDF transform as sample_outputs, on the same uniforms
        cdf = np.cumsum(channel.rows, axis=1)
        y = np.empty((m, L), dtype=np.int64)
        for s in range(channel.n_inputs):
            mask = x == s
            if np.any(mask):
                y[mask] = np.searchsorted(cdf[s], u[:, 1:][mask], side="right")
        np.clip(y, 0, channel.n_outputs - 1, out=y)

        ref = self.decoder.reference
        mu, norm = self.decoder.mu, self.decoder.norm
        v_hat = np.zeros(m, dtype=np.int64)  # 0 marks "no declaration"
        alive = np.ones(m, dtype=bool)
        for t in range(1, T + 1):
            if not np.any(alive):
                break
            window = y[:, t - 1 : t - 1 + n]
            acc = np.zeros(m)
            for s in np.unique(self.word_inputs):
                wmask = self.word_inputs == s
                sub = window[:, wmask]
                for yv in range(channel.n_outputs):
                    dev = np.abs((sub == yv).sum(axis=1) / n - ref[s, yv])
                    if norm == "linf":
                        np.maximum(acc, dev, out=acc)
                    else:
                        acc += dev
            fired = alive & (acc <= mu)
            v_hat[fired] = t
            alive &= ~fired
        counts["E3"] += int(np.count_nonzero(v_hat == 0))
        declared = v_hat > 0
        counts["Correct"] += int(np.count_nonzero(declared & (v_hat == v)))
        counts["E2"] += int(
            np.count_nonzero(declared & (v_hat >= v - n + 1) & (v_hat <= v - 1))
        )
        counts["E1"] += int(
            np.count_nonzero(declared & (v_hat != v) & ((v_hat < v - n + 1) | (v_hat > v)))
        )
        return counts


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Counter-based per-trial stream keyed by (master_seed, trial_index)."""
    key = np.array([master_seed % 2**64, trial_index % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_trial(
    config: TrialConfig, rng: np.random.Generator, full_sim_max_a: int = FULL_SIM_MAX_A
) -> TrialOutcome:
    """Run one trial: draw v, synthesize outputs, decode, classify."""
    return TrialEngine(config, full_sim_max_a).run(rng)


def wilson_interval(successes: int, trials: int, z: float = Z_95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be >= 1")
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, center - half)
    hi = 1.0 if successes == trials else min(1.0, center + half)
    return (lo, hi)


@dataclass(frozen=True)
class ErrorReport:
    """Monte Carlo error-rate estimates with 95% Wilson intervals."""

    trials: int
    n_correct: int
    n_e1: int
    n_e2: int
    n_e3: int

    @property
    def p_e1(self) -> float:
        return self.n_e1 / self.trials

    @property
    def p_e2(self) -> float:
        return self.n_e2 / self.trials

    @property
    def p_e3(self) -> float:
        return self.n_e3 / self.trials

    @property
    def p_err(self) -> float:
        # defined as the sum so the partition identity holds exactly in floats
        return self.p_e1 + self.p_e2 + self.p_e3

    @property
    def n_err(self) -> int:
        return self.n_e1 + self.n_e2 + self.n_e3

    def wilson_ci_95(self) -> dict[str, tuple[float, float]]:
        return {
            "p_err": wilson_interval(self.n_err, self.trials),
            "p_e1": wilson_interval(self.n_e1, self.trials),
            "p_e2": wilson_interval(self.n_e2, self.trials),
            "p_e3": wilson_interval(self.n_e3, self.trials),
        }

    def to_json_dict(self) -> dict:
        ci = self.wilson_ci_95()
        return {
            "trials": self.trials,
            "counts": {
                "correct": self.n_correct,
                "e1": self.n_e1,
                "e2": self.n_e2,
                "e3": self.n_e3,
            },
            "p_err": self.p_err,
            "p_e1": self.p_e1,
            "p_e2": self.p_e2,
            "p_e3": self.p_e3,
            "wilson_ci_95": {k: list(v) for k, v in ci.items()},
        }


_BATCH_CHUNK = 8192


def _count_range(config: TrialConfig, master_seed: int, lo: int, hi: int, full_sim_max_a: int):
    engine = TrialEngine(config, full_sim_max_a)
    counts = dict.fromkeys(CLASSES, 0)
    if engine.batchable:
        for start in range(lo, hi, _BATCH_CHUNK):
            part = engine.run_batch(master_seed, start, min(start + _BATCH_CHUNK, hi))
            for k in CLASSES:
                counts[k] += part[k]
        return counts
    for i in range(lo, hi):
        out = engine.run(trial_rng(master_seed, i))
        counts[out.klass] += 1
    return counts


def monte_carlo(
    config: TrialConfig,
    trials: int,
    master_seed: int,
    workers: int = 1,
    full_sim_max_a: int = FULL_SIM_MAX_A,
) -> ErrorReport:
    """Estimate error rates over independent trials.

    Trial i draws from a Philox stream keyed by (master_seed, i), so the
    report is bit-identical for any worker count or chunking.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if workers <= 1:
        counts = _count_range(config, master_seed, 0, trials, full_sim_max_a)
    else:
        counts = dict.fromkeys(CLASSES, 0)
        bounds = np.linspace(0, trials, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_count_range, config, master_seed, int(lo), int(hi), full_sim_max_a)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                part = fut.result()
                for k in CLASSES:
                    counts[k] += part[k]
    return ErrorReport(
        trials=trials,
        n_correct=counts["Correct"],
        n_e1=counts["E1"],
        n_e2=counts["E2"],
        n_e3=counts["E3"],
    )


@dataclass(frozen=True)
class ScalingRow:
    """One sweep row: sync length, window size, channel, and decoder settings."""

    n: int
    a: int
    alpha: float
    config: TrialConfig
    extra: dict = field(default_factory=dict)


def _window_from_exponent(ln_a: float) -> int:
    if ln_a > 700.0:
        raise ValueError(f"exp({ln_a:.1f}) overflows; asynchronism window too large")
    return max(1, int(round(math.exp(ln_a))))


def bsc_scaling_rows(
    eps: float,
    k: int,
    n_list: list[int],
    beta: float,
    mu: float,
    norm: str = "linf",
) -> list[ScalingRow]:
    """Achievability sweep rows: fixed BSC, A = round(exp(beta * alpha * N))."""
    from .channels import bsc as make_bsc
    from .sequences import build_sync_word
    from .thresholds import bsc_threshold_closed_form

    if not 0.0 < beta < 1.0:
        raise ValueError(f"beta must be in (0,1), got {beta}")
    alpha = bsc_threshold_closed_form(eps)
    channel = make_bsc(eps)
    rows = []
    for n in n_list:
        word = build_sync_word(n, k)
        a = _window_from_exponent(beta * alpha * n)
        config = TrialConfig(a=a, word=word, channel=channel, mu=mu, norm=norm)
        rows.append(ScalingRow(n=n, a=a, alpha=alpha, config=config))
    return rows


def smallest_valid_k(n: int, k_min: int = 2) -> int:
    """Smallest K >= k_min making floor(n/K) a valid prefix length 2^m - 1."""
    from .sequences import MIN_DEGREE, NoValidLength

    for k in range(k_min, n + 1):
        prefix = n // k
        if prefix < (1 << MIN_DEGREE) - 1:
            break
        if (prefix + 1) & prefix == 0:
            return k
    raise NoValidLength(f"no valid construction constant for n={n}")


def energy_scaling_rows(
    energy: float,
    sigma2: float,
    n_list: list[int],
    bins: int = 8,
    mu_coeff: float = 1.2,
    norm: str = "l1",
) -> list[ScalingRow]:
    """Fixed-energy sweep rows: P = E/N, A = round(exp(E / (4 sigma^2))).

    The feasibility threshold exp(E / (2 sigma^2)) is carried per row so
    reports can print it against A.
    """
    from .continuous import AwgnSpec, QuantizationGrid, quantize_to_dmc
    from .sequences import build_sync_word
    from .thresholds import sync_threshold

    a = _window_from_exponent(energy / (4.0 * sigma2))
    feas = math.exp(energy / (2.0 * sigma2)) if energy / (2.0 * sigma2) < 700 else math.inf
    s = math.sqrt(sigma2)
    rows = []
    for n in n_list:
        power = energy / n
        grid = QuantizationGrid(-5.0 * s, math.sqrt(power) + 5.0 * s, bins)
        channel = quantize_to_dmc(AwgnSpec(power=power, noise_var=sigma2), grid)
        word = build_sync_word(n, smallest_valid_k(n))
        mu = mu_coeff / math.sqrt(n)
        config = TrialConfig(a=a, word=word, channel=channel, mu=mu, norm=norm)
        rows.append(
            ScalingRow(
                n=n,
                a=a,
                alpha=sync_threshold(channel).alpha,
                config=config,
                extra={"feasibility_threshold": feas, "energy": energy, "power": power},
            )
        )
    return rows


def scaling_experiment(
    rows: list[ScalingRow],
    trials: int,
    master_seed: int,
    workers: int = 1,
    full_sim_max_a: int = FULL_SIM_MAX_A,
) -> list[tuple[ScalingRow, ErrorReport]]:
    """One Monte Carlo run per row, deterministic under the master seed."""
    results = []
    for row in rows:
        report = monte_carlo(
            row.config, trials, master_seed, workers=workers, full_sim_max_a=full_sim_max_a
        )
        results.append((row, report))
    return results


def scaling_to_csv(results: list[tuple[ScalingRow, ErrorReport]]) -> str:
    extra_keys = sorted({k for row, _ in results for k in row.extra})
    header = "n,a,alpha,p_err,ci_lo,ci_hi,p_e1,p_e2,p_e3"
    if extra_keys:
        header += "," + ",".join(extra_keys)
    lines = [header]
    for row, rep in results:
        lo, hi = rep.wilson_ci_95()["p_err"]
        cells = [
            f"{row.n}",
            f"{float(row.a):.15g}",
            f"{row.alpha:.15g}",
            f"{rep.p_err:.15g}",
            f"{lo:.15g}",
            f"{hi:.15g}",
            f"{rep.p_e1:.15g}",
            f"{rep.p_e2:.15g}",
            f"{rep.p_e3:.15g}",
        ]
        cells += [f"{float(row.extra[k]):.15g}" for k in extra_keys]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
