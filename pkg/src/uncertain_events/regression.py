"""Stage 2: generalize fitted parameters to any reported value.

Each distribution parameter gets its own regression on covariates built from
the reported value (log1p), indicators for the special reported values, and
optionally the information context: linear models on transformed location and
scale parameters, a fractional-logit model for the point weight.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import BundleError, CovariateError, InsufficientDataError, SingularityError
from .families import DistributionSpec, FamilyId
from .survey import SPECIAL_VALUES, VIOLENCE_TYPES

MODEL_VIOLENCE_TYPES = VIOLENCE_TYPES + ("all",)

#: JSON names for the covariate blocks
_BLOCKS = ("log1p_y", "special_dummies", "context")

#: regression response transform per parameter kind (meanlog is already a
#: log-scale quantity, shifts are unconstrained)
PARAM_TRANSFORM = {
    "location": "log1p",
    "rate": "log1p",
    "mean": "log1p",
    "meanlog": "identity",
    "scale": "log",
    "sdlog": "log",
    "size": "log",
    "point_weight": "logit",
    "shift": "identity",
}

_COMPACT = {"log1p_y": "y", "special_dummies": "D", "context": "z"}
_COMPACT_INV = {v: k for k, v in _COMPACT.items()}


@dataclass(frozen=True)
class CovariateSet:
    """Which covariate blocks enter one parameter's regression."""

    use_logy: bool = False
    use_dummies: bool = False
    use_context: bool = False

    def blocks(self) -> tuple[str, ...]:
        out = []
        if self.use_logy:
            out.append("log1p_y")
        if self.use_dummies:
            out.append("special_dummies")
        if self.use_context:
            out.append("context")
        return tuple(out)

    def label(self) -> str:
        """Compact label used in ranking tables: e.g. 'y+D', 'y+D+z', 'none'."""
        parts = [_COMPACT[b] for b in self.blocks()]
        return "+".join(parts) if parts else "none"

    @classmethod
    def from_label(cls, label: str) -> "CovariateSet":
        label = label.strip()
        if label in ("", "none"):
            return cls()
        blocks = set()
        for part in label.split("+"):
            if part not in _COMPACT_INV:
                raise CovariateError(f"unknown covariate label {part!r}")
            blocks.add(_COMPACT_INV[part])
        return cls.from_blocks(blocks)

    @classmethod
    def from_blocks(cls, blocks) -> "CovariateSet":
        blocks = set(blocks)
        unknown = blocks - set(_BLOCKS)
        if unknown:
            raise CovariateError(f"unknown covariate blocks {sorted(unknown)}")
        return cls("log1p_y" in blocks, "special_dummies" in blocks,
                   "context" in blocks)

    def column_names(self) -> tuple[str, ...]:
        names = ["intercept"]
        if self.use_logy:
            names.append("log1p_y")
        if self.use_dummies:
            names.extend(f"D_{v}" for v in SPECIAL_VALUES)
        if self.use_context:
            names.append("z_context_bad")
        return tuple(names)


def design_row(reported_value: int, z, cs: CovariateSet) -> np.ndarray:
    """One design-matrix row: intercept, log1p(y), special dummies, context."""
    if reported_value < 0:
        raise CovariateError("reported value must be nonnegative")
    row = [1.0]
    if cs.use_logy:
        row.append(float(np.log1p(reported_value)))
    if cs.use_dummies:
        row.extend(1.0 if reported_value == v else 0.0 for v in SPECIAL_VALUES)
    if cs.use_context:
        if z is None or "context" not in z:
            raise CovariateError("covariate set uses context but none was supplied")
        row.append(1.0 if z["context"] == "bad" else 0.0)
    return np.array(row, dtype=float)


def design_matrix(reported_values, zs, cs: CovariateSet) -> np.ndarray:
    return np.vstack([design_row(y, z, cs) for y, z in zip(reported_values, zs)])


# ---------------------------------------------------------------------------
# fitters
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionFit:
    coef: np.ndarray
    se: np.ndarray
    r2: float | None
    converged: bool = True


def fit_linear(X, y, ridge_fallback: bool = True,
               column_names=None) -> RegressionFit:
    """Ordinary least squares with an R^2 and coefficient standard errors.

    Rank deficiency falls back to a tiny ridge (1e-10) unless disabled, in
    which case a :class:`SingularityError` names the collinear columns.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if len(y) != n:
        raise InsufficientDataError("response length does not match design rows")
    if n < p:
        raise InsufficientDataError(f"{n} rows cannot identify {p} coefficients")

    r_diag = np.abs(np.diag(np.linalg.qr(X, mode="r")))
    tol = max(n, p) * np.finfo(float).eps * (r_diag.max() if r_diag.size else 1.0)
    deficient = bool((r_diag <= tol).any())
    xtx = X.T @ X
    if deficient:
        if not ridge_fallback:
            names = column_names or [f"col{j}" for j in range(p)]
            culprits = [names[j] for j in np.flatnonzero(r_diag <= tol)]
            raise SingularityError(
                f"design matrix is rank deficient near columns {culprits}", culprits
            )
        xtx = xtx + 1e-10 * np.eye(p)
        coef = np.linalg.solve(xtx, X.T @ y)
    else:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)

    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    sigma2 = ss_res / (n - p) if n > p else np.nan
    cov = sigma2 * np.linalg.inv(xtx)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return RegressionFit(coef, se, r2)


def _sigmoid(eta):
    return np.where(eta >= 0, 1.0 / (1.0 + np.exp(-eta)),
                    np.exp(eta) / (1.0 + np.exp(eta)))


def fit_fractional_logit(X, w, tol: float = 1e-8, max_iter: int = 100,
                         coef_bound: float = 20.0) -> RegressionFit:
    """Quasi-likelihood logit for proportions in [0, 1], fitted by IRLS.

    Separation cannot run away: coefficients are capped at +-coef_bound.
    """
    X = np.asarray(X, dtype=float)
    w = np.asarray(w, dtype=float)
    n, p = X.shape
    if len(w) != n:
        raise InsufficientDataError("response length does not match design rows")
    if n < p:
        raise InsufficientDataError(f"{n} rows cannot identify {p} coefficients")
    if np.any((w < 0.0) | (w > 1.0)):
        raise CovariateError("fractional responses must lie in [0, 1]")

    coef = np.zeros(p)
    converged = False
    weights = np.full(n, 0.25)
    for _ in range(max_iter):
        eta = X @ coef
        mu = _sigmoid(eta)
        weights = np.clip(mu * (1.0 - mu), 1e-10, None)
        working = eta + (w - mu) / weights
        wx = X * weights[:, None]
        new = np.linalg.solve(X.T @ wx + 1e-12 * np.eye(p), X.T @ (weights * working))
        new = np.clip(new, -coef_bound, coef_bound)
        step = float(np.max(np.abs(new - coef)))
        coef = new
        if step < tol:
            converged = True
            break
    mu = _sigmoid(X @ coef)
    weights = np.clip(mu * (1.0 - mu), 1e-10, None)
    pearson = float(np.sum((w - mu) ** 2 / weights))
    dispersion = pearson / (n - p) if n > p else np.nan
    cov = dispersion * np.linalg.inv(X.T @ (X * weights[:, None]) + 1e-12 * np.eye(p))
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    return RegressionFit(coef, se, None, converged)


def fit_logit_ols(X, w, clip: float = 0.001) -> RegressionFit:
    """Sensitivity alternative: OLS on logit(w) with clipping."""
    w = np.clip(np.asarray(w, dtype=float), clip, 1.0 - clip)
    fit = fit_linear(X, np.log(w / (1.0 - w)))
    return RegressionFit(fit.coef, fit.se, None)


# ---------------------------------------------------------------------------
# bundles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelSpec:
    """A family plus one covariate set per distribution parameter."""

    family: FamilyId
    violence_type: str
    covariates: tuple

    def __post_init__(self):
        if self.violence_type not in MODEL_VIOLENCE_TYPES:
            raise CovariateError(f"unknown violence type {self.violence_type!r}")
        if len(self.covariates) != self.family.n_params:
            raise CovariateError(
                f"{self.family.label()} needs {self.family.n_params} covariate sets"
            )

    @classmethod
    def uniform(cls, family: FamilyId, violence_type: str,
                cs: CovariateSet) -> "ModelSpec":
        return cls(family, violence_type, (cs,) * family.n_params)


@dataclass(frozen=True)
class ParameterModel:
    name: str
    transform: str
    link: str
    covariates: CovariateSet
    coefficients: dict
    se: dict | None = None

    def linear_predictor(self, reported_value: int, z) -> float:
        row = design_row(reported_value, z, self.covariates)
        beta = np.array([self.coefficients[c] for c in self.covariates.column_names()])
        return float(row @ beta)

    def predict(self, reported_value: int, z) -> float:
        eta = self.linear_predictor(reported_value, z)
        if self.transform == "log1p":
            floor = 1e-9 if self.name in ("rate", "mean") else 0.0
            return max(float(np.expm1(eta)), floor)
        if self.transform == "log":
            return float(np.exp(eta))
        if self.transform == "logit":
            return float(_sigmoid(eta))
        return eta


@dataclass(frozen=True)
class CoefficientBundle:
    """Per-parameter regression coefficients for one family and violence type."""

    family: FamilyId
    violence_type: str
    parameters: tuple
    diagnostics: dict

    def __post_init__(self):
        if len(self.parameters) != self.family.n_params:
            raise BundleError("one parameter model required per family parameter")

    def model_spec(self) -> ModelSpec:
        return ModelSpec(self.family, self.violence_type,
                         tuple(p.covariates for p in self.parameters))

    def to_json(self) -> str:
        doc = {
            "family": self.family.base,
            "mixture": self.family.mixture,
            "shifted": self.family.shifted,
            "violence_type": self.violence_type,
            "parameters": [
                {
                    "name": p.name,
                    "transform": p.transform,
                    "link": p.link,
                    "covariates": list(p.covariates.blocks()),
                    "coefficients": dict(p.coefficients),
                    **({"se": dict(p.se)} if p.se else {}),
                }
                for p in self.parameters
            ],
            "diagnostics": self.diagnostics,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CoefficientBundle":
        try:
            doc = json.loads(text)
            family = FamilyId(doc["family"], bool(doc.get("mixture", False)),
                              bool(doc.get("shifted", False)))
            params = []
            for entry in doc["parameters"]:
                cs = CovariateSet.from_blocks(entry["covariates"])
                params.append(ParameterModel(
                    entry["name"], entry["transform"], entry["link"], cs,
                    {k: float(v) for k, v in entry["coefficients"].items()},
                    {k: float(v) for k, v in entry.get("se", {}).items()} or None,
                ))
            bundle = cls(family, doc.get("violence_type", "all"), tuple(params),
                         doc.get("diagnostics", {}))
        except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
            raise BundleError(f"malformed coefficient bundle: {exc}") from exc
        for model, expected in zip(bundle.parameters, family.param_names):
            if model.name != expected:
                raise BundleError(
                    f"parameter {model.name!r} does not match family slot {expected!r}"
                )
        return bundle


def fit_bundle(fits, model: ModelSpec, w_method: str = "irls") -> CoefficientBundle:
    """Fit the stage-2 regressions for one model specification.

    ``fits`` is a collection of stage-1 results; rows are filtered to the
    model's family and violence type ('all' pools every type).
    """
    rows = [f for f in fits if f.family == model.family
            and (model.violence_type == "all"
                 or f.violence_type == model.violence_type)]
    if not rows:
        raise InsufficientDataError("no stage-1 fits match the model specification")
    # canonical row order keeps the fit bit-identical under input reordering
    rows.sort(key=lambda f: (f.coder_id, f.violence_type, f.context,
                             f.reported_value))
    names = model.family.param_names
    reported = [f.reported_value for f in rows]
    zs = [{"context": f.context} for f in rows]

    parameters = []
    r2s = []
    for index, name in enumerate(names):
        cs = model.covariates[index]
        X = design_matrix(reported, zs, cs)
        values = np.array([f.theta[index] for f in rows], dtype=float)
        transform = PARAM_TRANSFORM[name]
        if transform == "logit":
            fitter = fit_fractional_logit if w_method == "irls" else fit_logit_ols
            fit = fitter(X, values)
            link = "logit"
        else:
            if transform == "log1p":
                response = np.log1p(values)
            elif transform == "log":
                response = np.log(values)
            else:
                response = values
            fit = fit_linear(X, response, column_names=cs.column_names())
            link = "linear"
        cols = cs.column_names()
        parameters.append(ParameterModel(
            name, transform, link, cs,
            dict(zip(cols, (float(c) for c in fit.coef))),
            dict(zip(cols, (float(s) for s in fit.se))),
        ))
        r2s.append(None if fit.r2 is None else round(float(fit.r2), 6))
    diagnostics = {"n": len(rows), "r2": r2s}
    return CoefficientBundle(model.family, model.violence_type,
                             tuple(parameters), diagnostics)


def predict_theta(bundle: CoefficientBundle, reported_value: int,
                  z=None) -> DistributionSpec:
    """Assemble the predicted spec for one reported value."""
    theta = tuple(p.predict(reported_value, z) for p in bundle.parameters)
    anchor = int(reported_value) if bundle.family.mixture else None
    return DistributionSpec(bundle.family, theta, anchor=anchor)


# ---------------------------------------------------------------------------
# shipped bundle
# ---------------------------------------------------------------------------

BUNDLE_ENV_VAR = "UNCERTAIN_EVENTS_BUNDLE"


def default_bundle_path() -> Path:
    override = os.environ.get(BUNDLE_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).parent / "data" / "table2_sb.json"


def load_bundle(path=None) -> CoefficientBundle:
    source = Path(path) if path is not None else default_bundle_path()
    try:
        text = source.read_text(encoding="utf-8")
    except OSError as exc:
        raise BundleError(f"cannot read bundle {source}: {exc}") from exc
    return CoefficientBundle.from_json(text)
