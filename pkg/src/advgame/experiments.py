"""Desk-scale experiment harnesses tying training, attacks, and evaluation together.

The boosted-mixture benchmark mirrors the full evaluation protocol: per seed it
trains a plain adversarially trained baseline, builds the boosted mixture on
top of candidate first classifiers (selected by accuracy under attack, the
default), grid-searches the mixture weight on a validation split, and compares
exact expected accuracies under the adaptive attack on held-out test data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .attacks import PgdConfig, accuracy, accuracy_under_pgd, pgd_linf_batch
from .distributions import DistributionSpec, EmpiricalMeasure, sample_labeled
from .hypotheses import MixedClassifier, Mlp, as_mixture
from .training import TrainConfig, grid_search_alpha, train_adversarial, train_natural


def satellite_task() -> DistributionSpec:
    """The default 2-D benchmark: a main cluster pair plus a positive satellite.

    The satellite sits in the negative class's quadrant with low negative
    density around it, which keeps adversarial training honest (it must carve
    an island) while leaving room for the boosted second classifier to matter.
    """
    from .distributions import GaussianComponent

    return DistributionSpec(
        prior_pos=0.5,
        dimension=2,
        components_pos=(
            GaussianComponent(0.8, (0.30, 0.70), (0.004, 0.004)),
            GaussianComponent(0.2, (0.75, 0.25), (0.0036, 0.0036)),
        ),
        components_neg=(GaussianComponent(1.0, (0.55, 0.45), (0.0064, 0.0064)),),
    )


@dataclass(frozen=True)
class BatBenchmarkRow:
    seed: int
    at_clean: float
    at_aua: float
    mixture_clean: float
    mixture_aua: float
    alpha: float
    weights: tuple[float, ...]

    @property
    def improvement(self) -> float:
        return self.mixture_aua - self.at_aua


def bat_vs_at(spec: DistributionSpec, seed: int, *,
              n_train: int = 2000, n_test: int = 1000,
              train_cfg: TrainConfig | None = None,
              attack_train: PgdConfig | None = None,
              attack_eval: PgdConfig | None = None,
              first_candidates: int = 2,
              alpha_candidates=(0.0, 0.05, 0.1, 0.2, 0.3),
              box=(0.0, 1.0)) -> BatBenchmarkRow:
    """One seed of the benchmark comparison at desk scale.

    The baseline is the first adversarially trained candidate; the mixture may
    select a better first classifier by accuracy under attack (the bestAUA
    option) and picks its weight by grid search, both on a validation split.
    """
    eps = 0.08
    attack_train = attack_train or PgdConfig(eps, eps / 4, 20, 1, True, 0)
    attack_eval = attack_eval or PgdConfig(eps, eps / 10, 100, 2, True, 0)
    epochs = 25
    stages = ((0, 0.1), (15, 0.02), (21, 0.004))
    train_cfg = train_cfg or TrainConfig(
        epochs=epochs, batch_size=64, lr_stages=stages, seed=seed,
        sizes=(2, 24, 24, 2))
    data = sample_labeled(spec, n_train, seed=1000 + seed)
    val = sample_labeled(spec, n_test, seed=5000 + seed)
    test = sample_labeled(spec, n_test, seed=9000 + seed)

    candidates = []
    for k in range(first_candidates):
        sub = TrainConfig(**{**train_cfg.__dict__, "seed": train_cfg.seed + 101 * k})
        model, _ = train_adversarial(data, sub, attack_train, box=box)
        candidates.append(Mlp(model))
    baseline = candidates[0]  # the plain adversarially trained model

    val_auas = [accuracy_under_pgd(c, val.points, val.labels, attack_eval, box)
                for c in candidates]
    h1 = candidates[int(np.argmax(val_auas))]

    adv, _ = pgd_linf_batch(h1, data.points, data.labels, attack_train, box)
    d_tilde = EmpiricalMeasure(adv, data.labels, data.seed)
    cfg2 = TrainConfig(**{**train_cfg.__dict__, "seed": train_cfg.seed + 17})
    h2 = Mlp(train_natural(d_tilde, cfg2, box=box)[0])

    alpha, _ = grid_search_alpha(h1, h2, val, alpha_candidates, attack_eval, box=box)
    if alpha == 0.0:
        mixture = as_mixture(h1)
    else:
        mixture = MixedClassifier((h1, h2), (1.0 - alpha, alpha))

    return BatBenchmarkRow(
        seed=seed,
        at_clean=accuracy(baseline, test.points, test.labels),
        at_aua=accuracy_under_pgd(baseline, test.points, test.labels,
                                  attack_eval, box),
        mixture_clean=accuracy(mixture, test.points, test.labels),
        mixture_aua=accuracy_under_pgd(mixture, test.points, test.labels,
                                       attack_eval, box),
        alpha=float(alpha),
        weights=tuple(mixture.weights) if isinstance(mixture, MixedClassifier)
        else (1.0,),
    )


def bat_vs_at_benchmark(spec: DistributionSpec | None = None, seeds=(0, 1, 2, 3, 4),
                        **kwargs) -> list[BatBenchmarkRow]:
    spec = spec or satellite_task()
    return [bat_vs_at(spec, seed, **kwargs) for seed in seeds]
