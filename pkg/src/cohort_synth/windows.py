"""Per-cohort probabilistic activity models.

Starting times and durations of each activity code are clustered with a 1-D
variational Bayesian Gaussian mixture into starting windows and length
windows, then four probability structures are estimated from the cohort's
diaries: window occurrence, window -> length distribution, pairwise window
precedence, and window -> location distribution.

Travel-category codes get length windows only: synthesis re-inserts travel
deterministically at location changes, so travel is never sampled as a
first-class activity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.random import Generator

from .diary import ActivityDiary, major_category_of
from .rng import derive_seed, substream

SD_FLOOR = 2.5
DEFAULT_TRAVEL_CODE = 180101
_ELBO_TOL = 1e-6
_MAX_VB_ITERS = 500


@dataclass(frozen=True)
class GaussianComponent:
    mean: float
    sd: float
    weight: float

    def __post_init__(self):
        if self.sd < SD_FLOOR - 1e-9:
            raise ValueError(f"component sd {self.sd} below the {SD_FLOOR}-minute floor")
        if not (0.0 < self.weight <= 1.0 + 1e-9):
            raise ValueError(f"component weight must be in (0, 1], got {self.weight}")


@dataclass(frozen=True)
class StartWindow:
    window_id: int
    code: int
    component: GaussianComponent
    lo: float
    hi: float


@dataclass(frozen=True)
class LengthWindow:
    window_id: int
    code: int
    component: GaussianComponent
    lo: float
    hi: float


@dataclass
class BgmFit:
    components: list[GaussianComponent]
    elbo_trace: np.ndarray
    responsibilities: np.ndarray  # (n, k_max) of the selected run's last E-step


def _digamma(x: np.ndarray) -> np.ndarray:
    """Digamma via the asymptotic series after argument shifting.

    Accurate to ~1e-12 for positive arguments, which is all CAVI needs.
    """
    x = np.asarray(x, dtype=np.float64)
    result = np.zeros_like(x)
    x = x.copy()
    while True:
        small = x < 6.0
        if not small.any():
            break
        result[small] -= 1.0 / x[small]
        x[small] += 1.0
    inv2 = 1.0 / (x * x)
    result += (
        np.log(x)
        - 0.5 / x
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 / 240.0)))
    )
    return result


def _gammaln(x: np.ndarray) -> np.ndarray:
    return np.vectorize(math.lgamma, otypes=[np.float64])(x)


@dataclass
class _VbState:
    alpha: np.ndarray
    beta: np.ndarray
    m: np.ndarray
    a: np.ndarray
    b: np.ndarray


def _e_step(x: np.ndarray, st: _VbState) -> np.ndarray:
    e_ln_pi = _digamma(st.alpha) - _digamma(np.array([st.alpha.sum()]))[0]
    e_ln_lam = _digamma(st.a) - np.log(st.b)
    e_lam = st.a / st.b
    sq = (x[:, None] - st.m[None, :]) ** 2
    log_rho = (
        e_ln_pi[None, :]
        + 0.5 * e_ln_lam[None, :]
        - 0.5 * math.log(2.0 * math.pi)
        - 0.5 * (e_lam[None, :] * sq + 1.0 / st.beta[None, :])
    )
    log_rho -= log_rho.max(axis=1, keepdims=True)
    r = np.exp(log_rho)
    r /= r.sum(axis=1, keepdims=True)
    return r


def _m_step(x: np.ndarray, r: np.ndarray, alpha0: float, m0: float, beta0: float,
            a0: float, b0: float) -> _VbState:
    nk = r.sum(axis=0)
    safe = np.maximum(nk, 1e-12)
    xbar = (r * x[:, None]).sum(axis=0) / safe
    sk = (r * (x[:, None] - xbar[None, :]) ** 2).sum(axis=0) / safe
    alpha = alpha0 + nk
    beta = beta0 + nk
    m = (beta0 * m0 + nk * xbar) / beta
    a = a0 + nk / 2.0
    b = b0 + 0.5 * (nk * sk + (beta0 * nk / beta) * (xbar - m0) ** 2)
    return _VbState(alpha=alpha, beta=beta, m=m, a=a, b=b)


def _elbo(x: np.ndarray, r: np.ndarray, st: _VbState, alpha0: float, m0: float, beta0: float,
          a0: float, b0: float) -> float:
    n, k = r.shape
    nk = r.sum(axis=0)
    safe = np.maximum(nk, 1e-12)
    xbar = (r * x[:, None]).sum(axis=0) / safe
    sk = (r * (x[:, None] - xbar[None, :]) ** 2).sum(axis=0) / safe

    e_ln_pi = _digamma(st.alpha) - _digamma(np.array([st.alpha.sum()]))[0]
    e_ln_lam = _digamma(st.a) - np.log(st.b)
    lam_hat = st.a / st.b
    ln2pi = math.log(2.0 * math.pi)

    p_x = 0.5 * (
        nk * (e_ln_lam - ln2pi)
        - nk / st.beta
        - lam_hat * (nk * sk + nk * (xbar - st.m) ** 2)
    ).sum()
    p_z = float((nk * e_ln_pi).sum())
    p_pi = float(
        math.lgamma(k * alpha0) - k * math.lgamma(alpha0) + (alpha0 - 1.0) * e_ln_pi.sum()
    )
    p_mu_lam = float(
        (
            0.5 * (math.log(beta0 / (2.0 * math.pi)) + e_ln_lam - beta0 / st.beta
                   - beta0 * lam_hat * (st.m - m0) ** 2)
            + a0 * math.log(b0)
            - math.lgamma(a0)
            + (a0 - 1.0) * e_ln_lam
            - b0 * lam_hat
        ).sum()
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        rlogr = np.where(r > 0, r * np.log(r), 0.0)
    q_z = float(rlogr.sum())
    q_pi = float(
        math.lgamma(float(st.alpha.sum()))
        - _gammaln(st.alpha).sum()
        + ((st.alpha - 1.0) * e_ln_pi).sum()
    )
    q_mu_lam = float(
        (
            0.5 * (np.log(st.beta) - ln2pi + e_ln_lam - 1.0)
            + (st.a - 1.0) * e_ln_lam
            - st.a
            + st.a * np.log(st.b)
            - _gammaln(st.a)
        ).sum()
    )
    return p_x + p_z + p_pi + p_mu_lam - q_z - q_pi - q_mu_lam


def _initial_responsibilities(x: np.ndarray, k: int, rng: Generator, kind: str) -> np.ndarray:
    n = x.size
    if kind == "diffuse":
        noise = 0.05 * rng.standard_normal((n, k))
        r = np.exp(noise - noise.max(axis=1, keepdims=True))
        return r / r.sum(axis=1, keepdims=True)
    if kind == "concentrated":
        # Everything on one component; extra components only wake up if the
        # E-step finds splitting worthwhile. This basin wins on unimodal data.
        r = np.full((n, k), 1e-12)
        r[:, 0] = 1.0
        return r / r.sum(axis=1, keepdims=True)
    # "spread": soft assignment to jittered quantile anchors
    qs = (np.arange(k) + 0.5) / k
    anchors = np.quantile(x, qs) + rng.normal(0.0, 1e-3, size=k)
    scale = max(float(np.std(x)) / k, SD_FLOOR)
    log_r = -0.5 * ((x[:, None] - anchors[None, :]) / scale) ** 2
    log_r -= log_r.max(axis=1, keepdims=True)
    r = np.exp(log_r)
    return r / r.sum(axis=1, keepdims=True)


def fit_bgm_1d_detailed(samples, k_max: int = 8, seed: int = 0) -> BgmFit:
    """Variational Bayes fit of a 1-D Gaussian mixture.

    Dirichlet concentration 1/k_max, Normal-Gamma priors centered on the
    sample mean and precision. Runs from two deterministic initializations
    (quantile-spread and diffuse) and keeps the higher final ELBO. Components
    below the max(0.01, 2/n) expected-weight threshold are pruned and the
    rest renormalized.
    """
    x = np.asarray(list(samples), dtype=np.float64)
    n = x.size
    if n < 1:
        raise ValueError("need at least one sample")
    if n == 1:
        comp = GaussianComponent(mean=float(x[0]), sd=SD_FLOOR, weight=1.0)
        return BgmFit([comp], np.zeros(0), np.ones((1, 1)))

    k = int(k_max)
    alpha0 = 1.0 / k
    m0 = float(x.mean())
    var = max(float(x.var()), SD_FLOOR**2)
    # Priors centered on the sample mean and precision, but nearly
    # non-informative: a strong precision prior drags every component's
    # variance toward the global variance, which is badly wrong for
    # well-separated windows (night sleep vs naps).
    a0 = 1e-3
    b0 = a0 * var
    beta0 = 1e-2

    best: tuple[float, _VbState, np.ndarray, list[float]] | None = None
    for kind in ("spread", "diffuse", "concentrated"):
        rng = substream(seed, "bgm-init", kind)
        r = _initial_responsibilities(x, k, rng, kind)
        st = _m_step(x, r, alpha0, m0, beta0, a0, b0)
        trace: list[float] = []
        for _ in range(_MAX_VB_ITERS):
            r = _e_step(x, st)
            trace.append(_elbo(x, r, st, alpha0, m0, beta0, a0, b0))
            if len(trace) > 1 and abs(trace[-1] - trace[-2]) < _ELBO_TOL:
                break
            st = _m_step(x, r, alpha0, m0, beta0, a0, b0)
        if best is None or trace[-1] > best[0]:
            best = (trace[-1], st, r, trace)

    _, st, r, trace = best
    weights = st.alpha / st.alpha.sum()
    threshold = max(0.01, 2.0 / n)
    keep = np.flatnonzero(weights >= threshold)
    if keep.size == 0:
        keep = np.array([int(np.argmax(weights))])
    order = keep[np.argsort(st.m[keep], kind="stable")]
    total = weights[order].sum()
    components = [
        GaussianComponent(
            mean=float(st.m[j]),
            sd=float(max(math.sqrt(st.b[j] / st.a[j]), SD_FLOOR)),
            weight=float(weights[j] / total),
        )
        for j in order
    ]
    return BgmFit(components, np.asarray(trace), r)


def fit_bgm_1d(samples, k_max: int = 8, seed: int = 0) -> list[GaussianComponent]:
    return fit_bgm_1d_detailed(samples, k_max=k_max, seed=seed).components


@dataclass
class CohortActivityModel:
    class_id: int
    start_windows: tuple[StartWindow, ...]
    length_windows: tuple[LengthWindow, ...]
    p_occ: dict[int, float]
    p_len: dict[int, dict[int, float]]
    p_prec: dict[tuple[int, int], float]
    p_loc: dict[int, dict[int, float]]
    travel_code: int
    n_source_diaries: int

    def start_window(self, window_id: int) -> StartWindow:
        return self._start_index()[window_id]

    def length_window(self, window_id: int) -> LengthWindow:
        return self._length_index()[window_id]

    def _start_index(self) -> dict[int, StartWindow]:
        if not hasattr(self, "_sw_idx"):
            self._sw_idx = {w.window_id: w for w in self.start_windows}
        return self._sw_idx

    def _length_index(self) -> dict[int, LengthWindow]:
        if not hasattr(self, "_lw_idx"):
            self._lw_idx = {w.window_id: w for w in self.length_windows}
        return self._lw_idx

    def travel_length_minutes(self, default: float = 15.0) -> float:
        travel_major = major_category_of(self.travel_code)
        means = [
            w.component.mean
            for w in self.length_windows
            if major_category_of(w.code) == travel_major
        ]
        return float(np.mean(means)) if means else float(default)


def derive_windows(
    diaries: list[ActivityDiary],
    k_max: int = 8,
    seed: int = 0,
    travel_code: int = DEFAULT_TRAVEL_CODE,
) -> tuple[tuple[StartWindow, ...], tuple[LengthWindow, ...]]:
    """Fit start windows (non-travel codes) and length windows (all codes)."""
    if not diaries:
        raise ValueError("cannot derive windows from an empty class")
    travel_major = major_category_of(travel_code)
    starts: dict[int, list[float]] = {}
    durations: dict[int, list[float]] = {}
    for diary in diaries:
        for rec in diary.records:
            code = rec.code.code
            durations.setdefault(code, []).append(float(rec.duration_min))
            if major_category_of(code) != travel_major:
                starts.setdefault(code, []).append(float(rec.start_min))

    start_windows: list[StartWindow] = []
    for code in sorted(starts):
        comps = fit_bgm_1d(starts[code], k_max=k_max, seed=derive_seed(seed, "start", code))
        for comp in comps:
            lo = max(0.0, comp.mean - 2.0 * comp.sd)
            hi = min(1439.0, comp.mean + 2.0 * comp.sd)
            start_windows.append(StartWindow(len(start_windows), code, comp, lo, hi))

    length_windows: list[LengthWindow] = []
    for code in sorted(durations):
        comps = fit_bgm_1d(durations[code], k_max=k_max, seed=derive_seed(seed, "length", code))
        for comp in comps:
            lo = max(1.0, comp.mean - 2.0 * comp.sd)
            hi = max(lo + 1.0, min(1440.0, comp.mean + 2.0 * comp.sd))
            length_windows.append(LengthWindow(len(length_windows), code, comp, lo, hi))
    return tuple(start_windows), tuple(length_windows)


def _log_responsibility(x: float, comp: GaussianComponent) -> float:
    z = (x - comp.mean) / comp.sd
    return math.log(comp.weight) - math.log(comp.sd) - 0.5 * z * z


def _best_window(x: float, windows: list) -> int:
    best_id = None
    best_val = -math.inf
    for w in windows:  # ascending window_id; strict > keeps the lower id on ties
        val = _log_responsibility(x, w.component)
        if val > best_val:
            best_val = val
            best_id = w.window_id
    return best_id


def assign_instances(
    diaries: list[ActivityDiary], start_windows: tuple[StartWindow, ...]
) -> dict[tuple[str, int], int]:
    """Map each non-travel record (case_id, record index) to the start window
    of its code with maximum responsibility at the record's start time."""
    by_code: dict[int, list[StartWindow]] = {}
    for w in start_windows:
        by_code.setdefault(w.code, []).append(w)
    out: dict[tuple[str, int], int] = {}
    for diary in diaries:
        for idx, rec in enumerate(diary.records):
            windows = by_code.get(rec.code.code)
            if windows is None:
                continue  # travel records carry no start window
            out[(diary.case_id, idx)] = _best_window(float(rec.start_min), windows)
    return out


def _smoothed(counts: dict[int, int]) -> dict[int, float]:
    """Laplace +1 over the observed support."""
    total = sum(counts.values()) + len(counts)
    return {k: (v + 1) / total for k, v in sorted(counts.items())}


def estimate_probabilities(
    diaries: list[ActivityDiary],
    start_windows: tuple[StartWindow, ...],
    length_windows: tuple[LengthWindow, ...],
    assignments: dict[tuple[str, int], int],
    class_id: int = 0,
    travel_code: int = DEFAULT_TRAVEL_CODE,
) -> CohortActivityModel:
    """Estimate the four probability structures from assigned records."""
    n = len(diaries)
    lw_by_code: dict[int, list[LengthWindow]] = {}
    for w in length_windows:
        lw_by_code.setdefault(w.code, []).append(w)

    occ_counts: dict[int, int] = {w.window_id: 0 for w in start_windows}
    len_counts: dict[int, dict[int, int]] = {w.window_id: {} for w in start_windows}
    loc_counts: dict[int, dict[int, int]] = {w.window_id: {} for w in start_windows}
    pair_first: dict[tuple[int, int], int] = {}
    pair_total: dict[tuple[int, int], int] = {}

    for diary in diaries:
        earliest: dict[int, int] = {}
        for idx, rec in enumerate(diary.records):
            w_id = assignments.get((diary.case_id, idx))
            if w_id is None:
                continue
            if w_id not in earliest or rec.start_min < earliest[w_id]:
                earliest[w_id] = rec.start_min
            lw_id = _best_window(float(rec.duration_min), lw_by_code[rec.code.code])
            len_counts[w_id][lw_id] = len_counts[w_id].get(lw_id, 0) + 1
            loc = rec.location.loc_id
            loc_counts[w_id][loc] = loc_counts[w_id].get(loc, 0) + 1
        for w_id in earliest:
            occ_counts[w_id] += 1
        present = sorted(earliest)
        for i, a in enumerate(present):
            for b in present[i + 1 :]:
                pair_total[(a, b)] = pair_total.get((a, b), 0) + 1
                # Simultaneous earliest starts break toward the lower id.
                if earliest[a] <= earliest[b]:
                    pair_first[(a, b)] = pair_first.get((a, b), 0) + 1

    p_occ = {w: (c + 1) / (n + 2) for w, c in sorted(occ_counts.items())}

    p_len: dict[int, dict[int, float]] = {}
    p_loc: dict[int, dict[int, float]] = {}
    sw_by_id = {w.window_id: w for w in start_windows}
    for w_id in sorted(len_counts):
        if len_counts[w_id]:
            p_len[w_id] = _smoothed(len_counts[w_id])
        else:
            support = [lw.window_id for lw in lw_by_code[sw_by_id[w_id].code]]
            p_len[w_id] = {lw: 1.0 / len(support) for lw in support}
    all_locs = sorted({rec.location.loc_id for d in diaries for rec in d.records})
    for w_id in sorted(loc_counts):
        if loc_counts[w_id]:
            p_loc[w_id] = _smoothed(loc_counts[w_id])
        else:
            p_loc[w_id] = {loc: 1.0 / len(all_locs) for loc in all_locs}

    p_prec: dict[tuple[int, int], float] = {}
    for (a, b), total in sorted(pair_total.items()):
        first = pair_first.get((a, b), 0)
        p_ab = (first + 1) / (total + 2)
        p_prec[(a, b)] = p_ab
        p_prec[(b, a)] = 1.0 - p_ab

    return CohortActivityModel(
        class_id=class_id,
        start_windows=start_windows,
        length_windows=length_windows,
        p_occ=p_occ,
        p_len=p_len,
        p_prec=p_prec,
        p_loc=p_loc,
        travel_code=travel_code,
        n_source_diaries=n,
    )


def fit_cohort_model(
    diaries: list[ActivityDiary],
    class_id: int,
    k_max: int = 8,
    seed: int = 0,
    travel_code: int = DEFAULT_TRAVEL_CODE,
) -> CohortActivityModel:
    start_windows, length_windows = derive_windows(diaries, k_max=k_max, seed=seed, travel_code=travel_code)
    assignments = assign_instances(diaries, start_windows)
    return estimate_probabilities(
        diaries, start_windows, length_windows, assignments, class_id=class_id, travel_code=travel_code
    )


def _sig12(p: float) -> float:
    return float(f"{p:.12g}")


def model_to_json(model: CohortActivityModel) -> dict:
    def window_payload(w):
        return {
            "window_id": w.window_id,
            "code": w.code,
            "mean": w.component.mean,
            "sd": w.component.sd,
            "weight": _sig12(w.component.weight),
            "lo": w.lo,
            "hi": w.hi,
        }

    return {
        "class_id": model.class_id,
        "n_source_diaries": model.n_source_diaries,
        "travel_code": model.travel_code,
        "start_windows": [window_payload(w) for w in model.start_windows],
        "length_windows": [window_payload(w) for w in model.length_windows],
        "p_occ": {str(k): _sig12(v) for k, v in sorted(model.p_occ.items())},
        "p_len": {
            str(k): {str(j): _sig12(p) for j, p in sorted(v.items())}
            for k, v in sorted(model.p_len.items())
        },
        "p_prec": _nest_pairs(model.p_prec),
        "p_loc": {
            str(k): {str(j): _sig12(p) for j, p in sorted(v.items())}
            for k, v in sorted(model.p_loc.items())
        },
    }


def _nest_pairs(p_prec: dict[tuple[int, int], float]) -> dict:
    nested: dict[str, dict[str, float]] = {}
    for (a, b), p in sorted(p_prec.items()):
        nested.setdefault(str(a), {})[str(b)] = _sig12(p)
    return nested


def model_from_json(payload: dict) -> CohortActivityModel:
    def parse_start(w):
        comp = GaussianComponent(w["mean"], w["sd"], w["weight"])
        return StartWindow(w["window_id"], w["code"], comp, w["lo"], w["hi"])

    def parse_length(w):
        comp = GaussianComponent(w["mean"], w["sd"], w["weight"])
        return LengthWindow(w["window_id"], w["code"], comp, w["lo"], w["hi"])

    p_prec = {
        (int(a), int(b)): p
        for a, row in payload["p_prec"].items()
        for b, p in row.items()
    }
    return CohortActivityModel(
        class_id=payload["class_id"],
        start_windows=tuple(parse_start(w) for w in payload["start_windows"]),
        length_windows=tuple(parse_length(w) for w in payload["length_windows"]),
        p_occ={int(k): v for k, v in payload["p_occ"].items()},
        p_len={int(k): {int(j): p for j, p in v.items()} for k, v in payload["p_len"].items()},
        p_prec=p_prec,
        p_loc={int(k): {int(j): p for j, p in v.items()} for k, v in payload["p_loc"].items()},
        travel_code=payload["travel_code"],
        n_source_diaries=payload["n_source_diaries"],
    )


def save_model(model: CohortActivityModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_json(model), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_model(path) -> CohortActivityModel:
    return model_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
