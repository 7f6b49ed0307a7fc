"""Gradient-based attacks and the robust-accuracy evaluation harness.

Attacks run against any differentiable model: linear hypotheses, the
hand-rolled nets, and finite mixtures of those. Mixtures are attacked through
the exact expectation over the weight vector (no Monte Carlo anywhere): either
the expected logits or the expected loss, both with exact gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nets
from .errors import ConfigError, DimensionMismatch, UnsupportedKind
from .hypotheses import Hypothesis, Linear, MixedClassifier, Mlp, as_mixture


@dataclass(frozen=True)
class PgdConfig:
    epsilon_inf: float
    step: float
    iters: int
    restarts: int = 1
    random_init: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.epsilon_inf <= 0:
            raise ConfigError("epsilon_inf must be > 0")
        if self.step <= 0:
            raise ConfigError("step must be > 0")
        if self.iters < 1:
            raise ConfigError("iters must be >= 1")
        if self.restarts < 1:
            raise ConfigError("restarts must be >= 1")


@dataclass(frozen=True)
class CwConfig:
    lr: float = 0.01
    binary_search_steps: int = 9
    initial_const: float = 1e-3
    iters: int = 100
    abort_early: bool = True
    seed: int = 0

    def __post_init__(self):
        for name in ("lr", "binary_search_steps", "initial_const", "iters"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be > 0")


# Presets from the evaluation protocol: PGD at eps_inf ~ 8/255 with step 2/255
# and random restarts; C&W with 9 binary-search steps from constant 1e-3 and
# rejection thresholds 0.4 / 0.6 / 0.8. Training-time PGD uses 20 iterations,
# evaluation 100 (five times more).
PGD_PAPER = PgdConfig(epsilon_inf=0.031, step=0.008, iters=100, restarts=3)
PGD_TRAIN_PAPER = PgdConfig(epsilon_inf=0.031, step=0.008, iters=20, restarts=1)
CW_PAPER = CwConfig(lr=0.01, binary_search_steps=9, initial_const=1e-3,
                    iters=100, abort_early=True)
CW_REJECT_THRESHOLDS = (0.4, 0.6, 0.8)

ATTACK_PRESETS = {
    "pgd_paper": PGD_PAPER,
    "pgd_train_paper": PGD_TRAIN_PAPER,
    "at_paper": PGD_TRAIN_PAPER,  # training-time attack of the AT protocol
    "cw_paper": CW_PAPER,
}


@dataclass(frozen=True)
class AttackResult:
    """One attacked sample; if rejected, x_adv has been reset to the natural point."""

    x_adv: np.ndarray
    norm_l2: float
    norm_linf: float
    success: bool
    rejected: bool = False
    loss_trace: tuple[float, ...] = ()


# ---------------------------------------------------------------------------
# Differentiable-model plumbing
# ---------------------------------------------------------------------------

def _require_differentiable(model) -> MixedClassifier:
    mix = as_mixture(model)
    for h in mix.hypotheses:
        if not isinstance(h, (Linear, Mlp)):
            raise UnsupportedKind(
                f"{type(h).__name__} is not differentiable; attacks need linear or mlp kinds"
            )
    return mix


def _component_logits(h: Hypothesis, X: np.ndarray) -> np.ndarray:
    if isinstance(h, Linear):
        g = h.decision_values(X)
        return np.column_stack([-g, g])
    if isinstance(h, Mlp):
        return nets.logit_pair_from_output(nets.forward(h.net, X))
    raise UnsupportedKind(type(h).__name__)


def _component_logit_vjp(h: Hypothesis, X: np.ndarray, dpair: np.ndarray) -> np.ndarray:
    """Input gradient of sum(dpair * logit_pair(X))."""
    if isinstance(h, Linear):
        dg = dpair[:, 1] - dpair[:, 0]
        return dg[:, None] * np.asarray(h.w)[None, :]
    if isinstance(h, Mlp):
        out_dim = h.net.out_dim
        dout = dpair if out_dim == 2 else (dpair[:, 1] - dpair[:, 0]).reshape(-1, 1)
        _, dX = nets.backward(h.net, X, dout, need_param_grads=False)
        return dX
    raise UnsupportedKind(type(h).__name__)


def model_logits(model, X: np.ndarray) -> np.ndarray:
    """Exact expected logit pair of the model at each row of X."""
    mix = _require_differentiable(model)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros((X.shape[0], 2))
    for q, h in zip(mix.weights, mix.hypotheses):
        out += q * _component_logits(h, X)
    return out


def eot_logits(m: MixedClassifier, x) -> np.ndarray:
    """Expected decision values of a mixture, exactly from the weight vector."""
    return model_logits(m, np.atleast_2d(np.asarray(x, dtype=float)))[0]


def loss_and_input_grad(model, X: np.ndarray, Y, mode: str = "eot_logits"):
    """Per-sample CE loss and its input gradient.

    mode "eot_logits": loss of the expected logits (the default adaptive
    gradient); mode "eot_loss": expectation of the per-component losses.
    Both coincide for deterministic models.
    """
    mix = _require_differentiable(model)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.broadcast_to(np.asarray(Y, dtype=int), (X.shape[0],))
    if mode == "eot_logits":
        pair = model_logits(mix, X)
        loss, dpair = nets.ce_loss(pair, Y)
        grad = np.zeros_like(X)
        for q, h in zip(mix.weights, mix.hypotheses):
            grad += q * _component_logit_vjp(h, X, dpair)
        return loss, grad
    if mode == "eot_loss":
        loss = np.zeros(X.shape[0])
        grad = np.zeros_like(X)
        for q, h in zip(mix.weights, mix.hypotheses):
            pair = _component_logits(h, X)
            li, dpair = nets.ce_loss(pair, Y)
            loss += q * li
            grad += q * _component_logit_vjp(h, X, dpair)
        return loss, grad
    raise ConfigError(f"unknown EOT mode {mode!r}")


def expected_errors(model, X, Y) -> np.ndarray:
    return as_mixture(model).expected_errors(X, Y)


def accuracy(model, X, Y) -> float:
    """Exact expected accuracy (no sampling of the mixture)."""
    return float(1.0 - expected_errors(model, X, Y).mean())


# ---------------------------------------------------------------------------
# PGD (l-infinity)
# ---------------------------------------------------------------------------

def _clip_box(X: np.ndarray, box) -> np.ndarray:
    if box is None:
        return X
    return np.clip(X, box[0], box[1])


def pgd_linf_batch(model, X: np.ndarray, Y, cfg: PgdConfig,
                   box=(0.0, 1.0), mode: str = "eot_logits"):
    """Best-of-restarts signed-gradient ascent, projected to the ball each step.

    Returns (adversarial points, per-sample best losses).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.broadcast_to(np.asarray(Y, dtype=int), (X.shape[0],))
    eps = cfg.epsilon_inf
    best_x = np.array(X, copy=True)
    best_loss = np.full(X.shape[0], -np.inf)
    for restart in range(cfg.restarts):
        # per-restart stream: row i's draw is a function of (seed, restart, i),
        # independent of how samples are batched
        rng = np.random.default_rng((cfg.seed, restart))
        init = rng.uniform(-eps, eps, X.shape) if cfg.random_init else 0.0
        x_adv = _clip_box(X + init, box)
        for _ in range(cfg.iters):
            _, grad = loss_and_input_grad(model, x_adv, Y, mode)
            x_adv = x_adv + cfg.step * np.sign(grad)
            x_adv = np.clip(x_adv, X - eps, X + eps)
            x_adv = _clip_box(x_adv, box)
        loss, _ = loss_and_input_grad(model, x_adv, Y, mode)
        better = loss > best_loss
        best_x[better] = x_adv[better]
        best_loss[better] = loss[better]
    return best_x, best_loss


def pgd_linf(model, x, y: int, cfg: PgdConfig, box=(0.0, 1.0),
             mode: str = "eot_logits") -> AttackResult:
    """Single-sample PGD; the loss trace is the running best over all iterates."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    X = x.reshape(1, -1)
    eps = cfg.epsilon_inf
    best_x = X.copy()
    best_loss = -np.inf
    trace = []
    for restart in range(cfg.restarts):
        rng = np.random.default_rng((cfg.seed, restart))
        init = rng.uniform(-eps, eps, X.shape) if cfg.random_init else 0.0
        x_adv = _clip_box(X + init, box)
        for _ in range(cfg.iters):
            loss, grad = loss_and_input_grad(model, x_adv, np.array([y]), mode)
            if loss[0] > best_loss:
                best_loss, best_x = float(loss[0]), x_adv.copy()
            trace.append(best_loss)
            x_adv = x_adv + cfg.step * np.sign(grad)
            x_adv = np.clip(x_adv, X - eps, X + eps)
            x_adv = _clip_box(x_adv, box)
        loss, _ = loss_and_input_grad(model, x_adv, np.array([y]), mode)
        if loss[0] > best_loss:
            best_loss, best_x = float(loss[0]), x_adv.copy()
        trace.append(best_loss)
    adv = best_x[0]
    return AttackResult(
        x_adv=adv,
        norm_l2=float(np.linalg.norm(adv - x)),
        norm_linf=float(np.abs(adv - x).max()),
        success=bool(expected_errors(model, adv.reshape(1, -1), y)[0] > 0.5),
        loss_trace=tuple(trace),
    )


# ---------------------------------------------------------------------------
# C&W (l2) with tanh change of variable and binary search on the constant
# ---------------------------------------------------------------------------

def _cw_cost_and_grad(model, X: np.ndarray, Y: np.ndarray, mode: str):
    """Carlini-Wagner margin cost max(z_true - z_other, 0) and its input grad."""
    mix = _require_differentiable(model)
    if mode == "eot_logits":
        pair = model_logits(mix, X)
        idx_true = (Y == 1).astype(int)
        z_true = pair[np.arange(len(Y)), idx_true]
        z_other = pair[np.arange(len(Y)), 1 - idx_true]
        margin = z_true - z_other
        active = margin > 0
        cost = np.maximum(margin, 0.0)
        sgn = np.where(Y == 1, 1.0, -1.0) * active  # d margin / d (z_pos - z_neg)
        dpair = np.column_stack([-sgn, sgn])
        grad = np.zeros_like(X)
        for q, h in zip(mix.weights, mix.hypotheses):
            grad += q * _component_logit_vjp(h, X, dpair)
        return cost, grad
    if mode == "eot_loss":
        cost = np.zeros(X.shape[0])
        grad = np.zeros_like(X)
        for q, h in zip(mix.weights, mix.hypotheses):
            pair = _component_logits(h, X)
            idx_true = (Y == 1).astype(int)
            z_true = pair[np.arange(len(Y)), idx_true]
            z_other = pair[np.arange(len(Y)), 1 - idx_true]
            margin = z_true - z_other
            active = margin > 0
            cost += q * np.maximum(margin, 0.0)
            sgn = np.where(Y == 1, 1.0, -1.0) * active
            grad += q * _component_logit_vjp(h, X, np.column_stack([-sgn, sgn]))
        return cost, grad
    raise ConfigError(f"unknown EOT mode {mode!r}")


def cw_l2_batch(model, X: np.ndarray, Y, cfg: CwConfig, box=(0.0, 1.0),
                mode: str = "eot_logits"):
    """Batched C&W: minimize ||tau||^2 + c * cost with Adam in tanh space.

    Returns (best adversarial points, best l2 norms, success mask). Failed
    samples keep their natural point and an infinite best norm.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.broadcast_to(np.asarray(Y, dtype=int), (X.shape[0],)).copy()
    if box is None:
        raise ConfigError("cw_l2 needs a box domain for the tanh change of variable")
    lo, hi = float(box[0]), float(box[1])
    scale, mid = (hi - lo) / 2.0, (hi + lo) / 2.0
    n = X.shape[0]
    x_tanh = np.arctanh(np.clip((X - mid) / scale, -1, 1) * 0.999999)
    const = np.full(n, cfg.initial_const)
    lower = np.zeros(n)
    upper = np.full(n, 1e10)
    o_best_l2 = np.full(n, np.inf)
    o_best_x = np.array(X, copy=True)
    o_success = np.zeros(n, dtype=bool)
    check_every = max(1, cfg.iters // 10)
    for _ in range(cfg.binary_search_steps):
        w = x_tanh.copy()
        m_t = np.zeros_like(w)
        v_t = np.zeros_like(w)
        step_success = np.zeros(n, dtype=bool)
        prev = np.inf
        for it in range(1, cfg.iters + 1):
            x_new = mid + scale * np.tanh(w)
            tau = x_new - X
            l2sq = (tau ** 2).sum(axis=1)
            cost, dcost = _cw_cost_and_grad(model, x_new, Y, mode)
            total = l2sq + const * cost
            miss = expected_errors(model, x_new, Y) > 0.5
            l2 = np.sqrt(l2sq)
            improved = miss & (l2 < o_best_l2)
            o_best_l2[improved] = l2[improved]
            o_best_x[improved] = x_new[improved]
            o_success |= miss
            step_success |= miss
            dx = 2.0 * tau + const[:, None] * dcost
            dw = dx * scale * (1.0 - np.tanh(w) ** 2)
            m_t = 0.9 * m_t + 0.1 * dw
            v_t = 0.999 * v_t + 0.001 * dw ** 2
            mhat = m_t / (1 - 0.9 ** it)
            vhat = v_t / (1 - 0.999 ** it)
            w = w - cfg.lr * mhat / (np.sqrt(vhat) + 1e-8)
            if cfg.abort_early and it % check_every == 0:
                if total.sum() > prev * 0.9999:
                    break
                prev = total.sum()
        # binary search on the constant, per sample
        upper = np.where(step_success, np.minimum(upper, const), upper)
        lower = np.where(step_success, lower, np.maximum(lower, const))
        mid_c = (lower + upper) / 2.0
        const = np.where(upper < 1e9, mid_c, np.where(step_success, const, const * 10.0))
    return o_best_x, o_best_l2, o_success


def cw_l2(model, x, y: int, cfg: CwConfig, box=(0.0, 1.0),
          mode: str = "eot_logits") -> AttackResult:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    adv, l2, ok = cw_l2_batch(model, x.reshape(1, -1), np.array([y]), cfg, box, mode)
    return AttackResult(
        x_adv=adv[0],
        norm_l2=float(np.linalg.norm(adv[0] - x)),
        norm_linf=float(np.abs(adv[0] - x).max()) if adv[0].size else 0.0,
        success=bool(ok[0]),
    )


def adaptive_cw(m: MixedClassifier, x, y: int, cfg: CwConfig,
                box=(0.0, 1.0)) -> AttackResult:
    """Run C&W through expected logits and through expected loss; keep the
    candidate with the larger exact expected error (smaller norm on ties)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    results = [cw_l2(m, x, y, cfg, box, mode) for mode in ("eot_logits", "eot_loss")]
    errs = [float(expected_errors(m, r.x_adv.reshape(1, -1), y)[0]) for r in results]
    if errs[0] == errs[1]:
        pick = 0 if results[0].norm_l2 <= results[1].norm_l2 else 1
    else:
        pick = int(np.argmax(errs))
    return results[pick]


def reject_threshold(natural, adversarial, epsilon2: float):
    """Discard perturbations whose l2 norm exceeds epsilon2 (non-strict accept).

    Returns (effective point, rejected flag); a rejected attack keeps the
    natural example.
    """
    natural = np.atleast_1d(np.asarray(natural, dtype=float))
    adversarial = np.atleast_1d(np.asarray(adversarial, dtype=float))
    if natural.shape != adversarial.shape:
        raise DimensionMismatch("natural and adversarial points differ in shape")
    if float(np.linalg.norm(adversarial - natural)) > epsilon2:
        return natural.copy(), True
    return adversarial.copy(), False


# ---------------------------------------------------------------------------
# Robust-accuracy evaluation
# ---------------------------------------------------------------------------

def accuracy_under_pgd(model, X, Y, cfg: PgdConfig, box=(0.0, 1.0),
                       mode: str = "eot_logits") -> float:
    adv, _ = pgd_linf_batch(model, X, Y, cfg, box, mode)
    return accuracy(model, adv, Y)


def accuracy_under_cw(model, X, Y, cfg: CwConfig, box=(0.0, 1.0),
                      reject_eps=CW_REJECT_THRESHOLDS,
                      adaptive: bool | None = None) -> dict[float, float]:
    """Accuracy after C&W with the hard-constraint filter, per threshold.

    For mixtures (adaptive defaults on) both EOT variants run and the stronger
    perturbation per sample is kept before the rejection filter.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.broadcast_to(np.asarray(Y, dtype=int), (X.shape[0],))
    mix = as_mixture(model)
    if adaptive is None:
        adaptive = len(mix) > 1
    adv_a, _, _ = cw_l2_batch(model, X, Y, cfg, box, "eot_logits")
    if adaptive:
        adv_b, _, _ = cw_l2_batch(model, X, Y, cfg, box, "eot_loss")
        err_a = expected_errors(model, adv_a, Y)
        err_b = expected_errors(model, adv_b, Y)
        l2_a = np.linalg.norm(adv_a - X, axis=1)
        l2_b = np.linalg.norm(adv_b - X, axis=1)
        take_b = (err_b > err_a) | ((err_b == err_a) & (l2_b < l2_a))
        adv = np.where(take_b[:, None], adv_b, adv_a)
    else:
        adv = adv_a
    norms = np.linalg.norm(adv - X, axis=1)
    out = {}
    for eps2 in np.atleast_1d(np.asarray(reject_eps, dtype=float)):
        effective = np.where((norms <= eps2)[:, None], adv, X)
        out[float(eps2)] = accuracy(model, effective, Y)
    return out
