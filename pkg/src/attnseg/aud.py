"""Acoustic unit discovery: MFCC features and a phone-loop HMM.

The phone loop chooses among unit sub-HMMs (left-to-right, diagonal
Gaussian mixture emissions) at every unit transition; unit weights
carry a symmetric Dirichlet prior whose MAP update drives unused units
to zero weight, so the model explains the data with a small unit set.
All likelihood computations run in the log domain.
"""

from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.fftpack import dct
from scipy.special import logsumexp

from .corpus import Segmentation


class AudError(ValueError):
    pass


# ---------------------------------------------------------------------------
# MFCC front-end

@dataclass
class MfccConfig:
    frame_len_s: float = 0.025
    frame_step_s: float = 0.010
    num_filters: int = 26
    num_ceps: int = 13
    preemphasis: float = 0.97
    delta_window: int = 2
    cmn: bool = True


@dataclass
class FeatureSequence:
    utt_id: str
    frame_step_s: float
    frame_len_s: float
    features: np.ndarray  # (F, D)

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise AudError("feature matrix must be (F >= 1, D)")
        if not np.all(np.isfinite(self.features)):
            raise AudError("%s: non-finite feature values" % self.utt_id)


def read_wav(path: str) -> tuple[np.ndarray, int]:
    """Load 16-bit mono PCM; returns (float samples in [-1, 1], sample rate)."""
    with wave.open(path, "rb") as w:
        if w.getnchannels() != 1:
            raise AudError("%s: expected mono audio" % path)
        if w.getsampwidth() != 2:
            raise AudError("%s: expected 16-bit PCM" % path)
        rate = w.getframerate()
        data = np.frombuffer(w.readframes(w.getnframes()), dtype="<i2")
    return data.astype(np.float64) / 32768.0, rate


def hz_to_mel(f):
    return 2595.0 * np.log10(1.0 + np.asarray(f) / 700.0)


def mel_to_hz(m):
    return 700.0 * (10.0 ** (np.asarray(m) / 2595.0) - 1.0)


def mel_filterbank(num_filters: int, nfft: int, rate: int) -> np.ndarray:
    """Triangular filters on the mel scale covering [0, rate/2]."""
    pts = mel_to_hz(np.linspace(hz_to_mel(0.0), hz_to_mel(rate / 2.0), num_filters + 2))
    bins = np.floor((nfft + 1) * pts / rate).astype(int)
    fb = np.zeros((num_filters, nfft // 2 + 1))
    for i in range(num_filters):
        lo, mid, hi = bins[i], bins[i + 1], bins[i + 2]
        for k in range(lo, mid):
            if mid > lo:
                fb[i, k] = (k - lo) / (mid - lo)
        for k in range(mid, hi):
            if hi > mid:
                fb[i, k] = (hi - k) / (hi - mid)
    return fb


def delta(feat: np.ndarray, window: int = 2) -> np.ndarray:
    """Regression deltas over +/-window frames with edge replication."""
    padded = np.pad(feat, ((window, window), (0, 0)), mode="edge")
    denom = 2 * sum(k * k for k in range(1, window + 1))
    F = feat.shape[0]
    out = np.zeros_like(feat)
    for k in range(1, window + 1):
        out += k * (padded[window + k: window + k + F] - padded[window - k: window - k + F])
    return out / denom


def extract_mfcc(signal: np.ndarray, rate: int, config: MfccConfig = MfccConfig(),
                 utt_id: str = "utt") -> FeatureSequence:
    """MFCC + deltas + delta-deltas (13 + 13 + 13 dims).

    Pre-emphasis, Hamming window, power spectrum, mel filterbank, log,
    DCT-II, per-utterance cepstral mean normalization, +/-2 frame
    regression deltas. Frame count = 1 + floor((samples - window)/step).
    """
    if rate < 8000:
        raise AudError("sample rate %d below 8 kHz" % rate)
    win = int(round(config.frame_len_s * rate))
    step = int(round(config.frame_step_s * rate))
    if len(signal) < win:
        raise AudError("audio shorter than one analysis window")
    n_frames = 1 + (len(signal) - win) // step
    emph = np.append(signal[0], signal[1:] - config.preemphasis * signal[:-1])
    nfft = 1
    while nfft < win:
        nfft *= 2
    window_fn = np.hamming(win)
    fb = mel_filterbank(config.num_filters, nfft, rate)
    frames = np.stack([emph[i * step: i * step + win] * window_fn for i in range(n_frames)])
    spec = np.abs(np.fft.rfft(frames, nfft)) ** 2 / nfft
    energies = np.maximum(spec @ fb.T, 1e-30)
    ceps = dct(np.log(energies), type=2, axis=1, norm="ortho")[:, : config.num_ceps]
    if config.cmn:
        ceps = ceps - ceps.mean(axis=0, keepdims=True)
    d1 = delta(ceps, config.delta_window)
    d2 = delta(d1, config.delta_window)
    feats = np.concatenate([ceps, d1, d2], axis=1)
    return FeatureSequence(utt_id, config.frame_step_s, config.frame_len_s, feats)


# ---------------------------------------------------------------------------
# Phone-loop HMM

@dataclass
class AudConfig:
    num_units: int = 100
    states_per_unit: int = 3
    mix_components: int = 2
    gamma: float = 0.5  # symmetric Dirichlet concentration over unit weights
    iterations: int = 10
    var_floor_frac: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if self.num_units < 2:
            raise AudError("need at least 2 units")
        if self.states_per_unit < 1 or self.mix_components < 1:
            raise AudError("states and mixture components must be >= 1")
        if self.gamma <= 0:
            raise AudError("gamma must be positive")


@dataclass
class AudModel:
    config: AudConfig
    log_pi: np.ndarray       # (U,) unit weights, may contain -inf for pruned units
    stay: np.ndarray         # (U, S) self-loop probabilities
    mix_weights: np.ndarray  # (U, S, M)
    means: np.ndarray        # (U, S, M, D)
    variances: np.ndarray    # (U, S, M, D) diagonal

    @property
    def num_units(self) -> int:
        return self.log_pi.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[-1]

    def active_units(self) -> np.ndarray:
        return np.where(np.isfinite(self.log_pi))[0]

    # -- composite-graph pieces -------------------------------------------

    def emission_loglik(self, feats: np.ndarray) -> np.ndarray:
        """(F, U*S) log p(x_t | state) under diagonal GMMs."""
        U, S, M, D = self.means.shape
        x = feats[:, None, None, None, :]  # (F,1,1,1,D)
        diff = x - self.means[None]
        ll = -0.5 * (
            np.sum(diff * diff / self.variances[None], axis=-1)
            + np.sum(np.log(self.variances), axis=-1)[None]
            + D * math.log(2 * math.pi)
        )  # (F,U,S,M)
        with np.errstate(divide="ignore"):
            ll = ll + np.log(self.mix_weights)[None]
        return logsumexp(ll, axis=-1).reshape(feats.shape[0], U * S)

    def component_log_post(self, feats: np.ndarray) -> np.ndarray:
        """(F, U, S, M) log responsibilities of mixture components within a state."""
        U, S, M, D = self.means.shape
        x = feats[:, None, None, None, :]
        diff = x - self.means[None]
        ll = -0.5 * (
            np.sum(diff * diff / self.variances[None], axis=-1)
            + np.sum(np.log(self.variances), axis=-1)[None]
            + D * math.log(2 * math.pi)
        )
        with np.errstate(divide="ignore"):
            ll = ll + np.log(self.mix_weights)[None]
        return ll - logsumexp(ll, axis=-1, keepdims=True)

    def log_transitions(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Dense (N, N) log transition matrix, initial and final log vectors.

        State (u, s) has index u*S + s. The last state of a unit exits
        with probability 1 - stay and then re-enters the loop through
        the unit weights; an utterance must end on such an exit.
        """
        U, S = self.stay.shape
        N = U * S
        A = np.full((N, N), -np.inf)
        with np.errstate(divide="ignore"):
            log_stay = np.log(self.stay)
            log_move = np.log1p(-self.stay)
        for u in range(U):
            if not np.isfinite(self.log_pi[u]):
                continue
            for s in range(S):
                i = u * S + s
                A[i, i] = log_stay[u, s]
                if s < S - 1:
                    A[i, i + 1] = log_move[u, s]
                else:
                    for u2 in range(U):
                        if np.isfinite(self.log_pi[u2]):
                            A[i, u2 * S] = log_move[u, s] + self.log_pi[u2]
        init = np.full(N, -np.inf)
        final = np.full(N, -np.inf)
        for u in range(U):
            if np.isfinite(self.log_pi[u]):
                init[u * S] = self.log_pi[u]
                final[u * S + S - 1] = log_move[u, S - 1]
        return A, init, final


def init_model(feats_list: list[FeatureSequence], config: AudConfig) -> AudModel:
    """Seeded global k-means over frames; one centroid per unit."""
    rng = np.random.default_rng(config.seed)
    X = np.concatenate([f.features for f in feats_list], axis=0)
    D = X.shape[1]
    U, S, M = config.num_units, config.states_per_unit, config.mix_components
    k = min(U, X.shape[0])
    centroids = X[rng.choice(X.shape[0], size=k, replace=False)]
    # a few Lloyd iterations are enough for initialization
    for _ in range(5):
        d2 = ((X[:, None, :] - centroids[None]) ** 2).sum(axis=-1)
        assign = d2.argmin(axis=1)
        for j in range(k):
            sel = X[assign == j]
            if len(sel):
                centroids[j] = sel.mean(axis=0)
    if k < U:
        centroids = np.concatenate(
            [centroids, centroids[rng.integers(0, k, U - k)]], axis=0
        )
    gvar = np.maximum(X.var(axis=0), 1e-6)
    means = np.zeros((U, S, M, D))
    for u in range(U):
        for s in range(S):
            for m in range(M):
                means[u, s, m] = centroids[u] + 0.1 * np.sqrt(gvar) * rng.standard_normal(D)
    variances = np.tile(gvar, (U, S, M, 1))
    return AudModel(
        config=config,
        log_pi=np.full(U, -math.log(U)),
        stay=np.full((U, S), 0.5),
        mix_weights=np.full((U, S, M), 1.0 / M),
        means=means,
        variances=variances,
    )


def forward_loglik(model: AudModel, feats: np.ndarray) -> float:
    """Log likelihood of a feature matrix under the phone loop (forward pass)."""
    b = model.emission_loglik(feats)
    A, init, final = model.log_transitions()
    alpha = init + b[0]
    for t in range(1, feats.shape[0]):
        alpha = logsumexp(alpha[:, None] + A, axis=0) + b[t]
    return float(logsumexp(alpha + final))


@dataclass
class _Stats:
    unit_entries: np.ndarray
    stay_num: np.ndarray
    stay_den: np.ndarray
    comp_occ: np.ndarray
    comp_sum: np.ndarray
    comp_sqsum: np.ndarray
    loglik: float = 0.0


def _estep_utterance(model: AudModel, feats: np.ndarray, stats: _Stats) -> None:
    U, S, M, D = model.means.shape
    N = U * S
    F = feats.shape[0]
    b = model.emission_loglik(feats)
    A, init, final = model.log_transitions()
    alpha = np.full((F, N), -np.inf)
    beta = np.full((F, N), -np.inf)
    alpha[0] = init + b[0]
    for t in range(1, F):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + A, axis=0) + b[t]
    beta[F - 1] = final
    for t in range(F - 2, -1, -1):
        beta[t] = logsumexp(A + (b[t + 1] + beta[t + 1])[None, :], axis=1)
    ll = float(logsumexp(alpha[F - 1] + final))
    if not math.isfinite(ll):
        raise AudError("non-finite likelihood during E-step")
    stats.loglik += ll
    with np.errstate(invalid="ignore"):
        gamma = np.exp(alpha + beta - ll)  # (F, N)
    gamma[~np.isfinite(gamma)] = 0.0
    # transition posteriors
    xi_sum = np.zeros((N, N))
    for t in range(F - 1):
        lx = alpha[t][:, None] + A + (b[t + 1] + beta[t + 1])[None, :] - ll
        xi_sum += np.exp(np.clip(lx, -700, 50))
    # unit entries: initial occupancy of first states + re-entries after exits
    first_idx = np.arange(U) * S
    entries = gamma[0].reshape(U, S)[:, 0].copy()
    entries += xi_sum[:, first_idx].sum(axis=0)
    stats.unit_entries += entries
    # stay/advance counts; final exit counts as leaving the last state
    diag = np.diag(xi_sum).reshape(U, S)
    occ_from = xi_sum.sum(axis=1).reshape(U, S)
    stats.stay_num += diag
    stats.stay_den += occ_from
    final_exit = np.exp(alpha[F - 1] + final - ll).reshape(U, S)
    stats.stay_den += final_exit
    # mixture-component stats
    comp_post = np.exp(model.component_log_post(feats))  # (F,U,S,M)
    resp = gamma.reshape(F, U, S, 1) * comp_post
    stats.comp_occ += resp.sum(axis=0)
    stats.comp_sum += np.einsum("fusm,fd->usmd", resp, feats)
    stats.comp_sqsum += np.einsum("fusm,fd->usmd", resp, feats * feats)


def map_objective(model: AudModel, loglik: float) -> float:
    """Data log likelihood plus symmetric-Dirichlet log prior on unit weights.

    Weights at exactly zero are floored at 1e-100 in the prior term so
    the objective stays finite; with gamma < 1 the prior rewards mass
    collapsing onto few units.
    """
    g = model.config.gamma
    with np.errstate(divide="ignore"):
        pi = np.exp(model.log_pi)
    prior = (g - 1.0) * np.sum(np.log(np.maximum(pi, 1e-100)))
    return loglik + float(prior)


def train_phone_loop(
    feats_list: list[FeatureSequence], config: AudConfig,
    model: Optional[AudModel] = None, quiet: bool = True,
) -> tuple[AudModel, list[float]]:
    """MAP-EM (Baum-Welch with Dirichlet MAP update for the unit weights).

    Returns the trained model with zero-weight units pruned, plus the
    per-iteration MAP objective values (non-decreasing).
    """
    if not feats_list:
        raise AudError("empty feature corpus")
    if model is None:
        model = init_model(feats_list, config)
    U, S, M, D = model.means.shape
    X = np.concatenate([f.features for f in feats_list], axis=0)
    var_floor = np.maximum(X.var(axis=0) * config.var_floor_frac, 1e-10)
    objectives = []
    for it in range(config.iterations):
        stats = _Stats(
            unit_entries=np.zeros(U),
            stay_num=np.zeros((U, S)),
            stay_den=np.zeros((U, S)),
            comp_occ=np.zeros((U, S, M)),
            comp_sum=np.zeros((U, S, M, D)),
            comp_sqsum=np.zeros((U, S, M, D)),
        )
        for f in feats_list:
            _estep_utterance(model, f.features, stats)
        objectives.append(map_objective(model, stats.loglik))
        if not quiet:
            print("iter %d  objective %.4f  active units %d"
                  % (it + 1, objectives[-1], len(model.active_units())))
        # M-step: MAP unit weights
        raw = np.maximum(0.0, stats.unit_entries + config.gamma - 1.0)
        raw[~np.isfinite(model.log_pi)] = 0.0
        total = raw.sum()
        if total <= 0:
            raise AudError("all unit weights collapsed to zero")
        with np.errstate(divide="ignore"):
            model.log_pi = np.log(raw / total)
        # self-loop probabilities (keep previous value for unused states)
        with np.errstate(invalid="ignore", divide="ignore"):
            stay = stats.stay_num / stats.stay_den
        mask = stats.stay_den > 1e-8
        model.stay[mask] = np.clip(stay[mask], 1e-4, 1.0 - 1e-4)
        # Gaussian mixtures
        occ = stats.comp_occ
        used = occ > 1e-8
        state_occ = occ.sum(axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            w = occ / state_occ
            mu = stats.comp_sum / occ[..., None]
            var = stats.comp_sqsum / occ[..., None] - mu * mu
        model.mix_weights = np.where(state_occ > 1e-8, w, model.mix_weights)
        model.means[used] = mu[used]
        model.variances[used] = np.maximum(var[used], var_floor)
    return prune_model(model), objectives


def prune_model(model: AudModel) -> AudModel:
    """Drop zero-weight units; survivors keep their relative weights."""
    keep = model.active_units()
    if len(keep) == 0:
        raise AudError("no active units to keep")
    log_pi = model.log_pi[keep]
    log_pi = log_pi - logsumexp(log_pi)
    return AudModel(
        config=model.config,
        log_pi=log_pi,
        stay=model.stay[keep].copy(),
        mix_weights=model.mix_weights[keep].copy(),
        means=model.means[keep].copy(),
        variances=model.variances[keep].copy(),
    )


@dataclass(frozen=True)
class TimedUnitSequence:
    utt_id: str
    intervals: tuple[tuple[str, float, float], ...]  # (label, start_s, end_s)

    def labels(self) -> tuple[str, ...]:
        return tuple(lab for lab, _, _ in self.intervals)


def decode_units(model: AudModel, feats: FeatureSequence) -> TimedUnitSequence:
    """Viterbi decoding to a time-marked pseudo-phone sequence.

    Maximal runs of the same unit merge into one interval; intervals
    tile [0, F * step] with no gaps.
    """
    x = feats.features
    if x.shape[1] != model.dim:
        raise AudError(
            "feature dim %d does not match model dim %d" % (x.shape[1], model.dim)
        )
    U, S = model.stay.shape
    b = model.emission_loglik(x)
    A, init, final = model.log_transitions()
    F = x.shape[0]
    N = U * S
    delta_ = init + b[0]
    back = np.zeros((F, N), dtype=np.int64)
    for t in range(1, F):
        scores = delta_[:, None] + A
        back[t] = scores.argmax(axis=0)
        delta_ = scores.max(axis=0) + b[t]
    delta_ = delta_ + final
    state = int(delta_.argmax())
    if not math.isfinite(delta_[state]):
        raise AudError("no valid Viterbi path")
    path = [state]
    for t in range(F - 1, 0, -1):
        state = int(back[t, state])
        path.append(state)
    path.reverse()
    units = [p // S for p in path]
    step = feats.frame_step_s
    intervals = []
    run_start = 0
    for t in range(1, F + 1):
        if t == F or units[t] != units[run_start]:
            intervals.append(
                ("a%d" % units[run_start], run_start * step, t * step)
            )
            run_start = t
    return TimedUnitSequence(feats.utt_id, tuple(intervals))


def viterbi_score(model: AudModel, feats: np.ndarray, state_path: list[int]) -> float:
    """Log score of an explicit composite-state path (for exhaustive checks)."""
    b = model.emission_loglik(feats)
    A, init, final = model.log_transitions()
    score = init[state_path[0]] + b[0, state_path[0]]
    for t in range(1, len(state_path)):
        score += A[state_path[t - 1], state_path[t]] + b[t, state_path[t]]
    return float(score + final[state_path[-1]])


# ---------------------------------------------------------------------------
# Timed-unit file I/O

def write_timed_units(path: str, sequences: list[TimedUnitSequence]) -> None:
    """One `<utt-id> <start> <end> <label>` line per interval, 6-decimal seconds."""
    with open(path, "w", encoding="utf-8") as f:
        for seq in sequences:
            for lab, s, e in seq.intervals:
                f.write("%s %.6f %.6f %s\n" % (seq.utt_id, s, e, lab))


def save_aud_model(path: str, model: AudModel) -> None:
    np.savez(
        path,
        log_pi=model.log_pi,
        stay=model.stay,
        mix_weights=model.mix_weights,
        means=model.means,
        variances=model.variances,
        config=np.array([
            model.config.num_units, model.config.states_per_unit,
            model.config.mix_components, model.config.gamma,
            model.config.iterations, model.config.var_floor_frac,
            model.config.seed,
        ]),
    )


def load_aud_model(path: str) -> AudModel:
    with np.load(path) as z:
        c = z["config"]
        config = AudConfig(
            num_units=int(c[0]), states_per_unit=int(c[1]), mix_components=int(c[2]),
            gamma=float(c[3]), iterations=int(c[4]), var_floor_frac=float(c[5]),
            seed=int(c[6]),
        )
        return AudModel(
            config=config,
            log_pi=z["log_pi"],
            stay=z["stay"],
            mix_weights=z["mix_weights"],
            means=z["means"],
            variances=z["variances"],
        )


def save_features(path: str, feats_list: list) -> None:
    arrays = {}
    for f in feats_list:
        arrays["feat/" + f.utt_id] = f.features
        arrays["time/" + f.utt_id] = np.array([f.frame_step_s, f.frame_len_s])
    np.savez(path, **arrays)


def load_features(path: str) -> list:
    out = []
    with np.load(path) as z:
        ids = sorted(k[len("feat/"):] for k in z.files if k.startswith("feat/"))
        for utt_id in ids:
            step, length = z["time/" + utt_id]
            out.append(FeatureSequence(utt_id, float(step), float(length), z["feat/" + utt_id]))
    return out
