"""Bayesian tensor-train completion with automatic rank determination."""
from dataclasses import dataclass
import json

import numpy as np

from . import _ttb
from ._ttb import (
    FormatError,
    NumericalError,
    ShapeError,
    add_noise,
    add_noise_variance,
    gen_synthetic,
    max_ranks,
    psnr,
    random_mask,
    read_image,
    rse,
    ssim,
    tt_contract,
    tt_svd,
    write_image,
)

__all__ = [
    "FitResult", "fit", "metrics", "make_plan", "augment", "augment_mask", "deaugment",
    "FormatError", "NumericalError", "ShapeError", "add_noise", "add_noise_variance",
    "gen_synthetic", "max_ranks", "psnr", "random_mask", "read_image", "rse", "ssim",
    "tt_contract", "tt_svd", "write_image",
]


@dataclass
class FitResult:
    reconstruction: np.ndarray
    ranks: list
    report: dict
    core_means: list
    core_vars: list

    @property
    def status(self):
        return self.report["status"]


def fit(a, mask=None, **options):
    """Variational fit; options mirror the CLI flags (max_iters, rel_tol, ...)."""
    yhat, report, ranks, means, variances = _ttb.fit(np.asarray(a, dtype=float), mask, **options)
    return FitResult(yhat, list(ranks), json.loads(report), means, variances)


def metrics(truth, estimate):
    return json.loads(_ttb.metrics_json(truth, estimate))


def make_plan(factors, mode="basic", channels=1):
    return json.loads(_ttb.make_plan(factors, mode, channels))


def _plan_text(plan):
    return plan if isinstance(plan, str) else json.dumps(plan)


def augment(img, plan):
    return _ttb.augment(img, _plan_text(plan))


def augment_mask(mask, plan):
    return _ttb.augment_mask(mask, _plan_text(plan))


def deaugment(t, plan):
    return _ttb.deaugment(t, _plan_text(plan))
