# File: mer.py
# Date: 02-10-2026
#
"""
Maximum entropy reconstruction.

Among all the non negative spectra f whose blurred image R.f reproduces the
data d within the noise, pick the one of maximal entropy. The constrained
problem is turned into the maximisation of the Lagrangian

    Q(f) = S(f) - lambda (chi2(f) - chi0^2)

with a fixed multiplier lambda, solved by conjugate gradient ascent with a
strong Wolfe line search. Two entropy forms are available:

* skilling-gull: S = sum(f - m - f log(f/m)), relative to a default model m
  which is also where a priori knowledge of the peaks enters;
* paper-shannon: S = -sum(p log p) with p = f / sum(f).

The data term is the normalised mean square error over the unmasked pixels

    chi2(f) = 1/N_active sum_active ((R.f - d)_j / sigma_j)^2

Progress is measured by the angle between the two gradients,
1/2 |gradS/|gradS| - gradChi2/|gradChi2||^2, which vanishes on the curve of
maximum entropy solutions. A point is accepted as the solution of the run
when this metric falls below the threshold and the two gradients are also
balanced by lambda (|gradS| = lambda |gradChi2|), i.e. gradQ is negligible.
"""

# General imports
import csv
import io
import math
from collections import deque, namedtuple
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional

import numpy as np

# Project imports
from .detector import DetectorModel
from .errors import DataError
from .lineshape import lorentzian_sum
from .linesearch import WolfeLineSearch
from .spectrum import Spectrum
from .spectrum_io import atomic_write_text
from .trace import logger


class EntropyForm(str, Enum):
    SHANNON = "paper-shannon"
    SKILLING = "skilling-gull"


class MerStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max-iterations"
    INFEASIBLE = "infeasible-data"


# Fraction of the pixels allowed to reach the positivity floor in one step
FLOOR_HIT_FRACTION = 0.1

# First trial step of a run, relative to max(f)/max|P|
FIRST_STEP = 0.05


@dataclass(frozen=True)
class MerConfig:
    """
    Knobs of the reconstruction.

    lambda_ : the Lagrange multiplier; None derives it from the data as
        lambda_scale * N_active * mean(sigma) (divided by the data total for
        the Shannon form, whose gradient scales as 1/sum(f)).
    lambda_search : replace lambda by a bisection targeting chi2 = chi0_sq
    prior_model : default model m (strictly positive, one value per pixel);
        None means a flat model at the mean of the data
    record_trace : keep one TraceRow per accepted iteration in the result
    """
    lambda_: Optional[float] = None
    lambda_scale: float = 2.0
    chi0_sq: float = 1.0
    termination_threshold: float = 0.01
    max_iterations: int = 2000
    num_conjugate_dirs: int = 2
    positivity_floor: float = 1e-12
    prior_model: Optional[np.ndarray] = field(default=None, compare=False, repr=False)
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    entropy_form: EntropyForm = EntropyForm.SKILLING
    lambda_search: bool = False
    max_line_evaluations: int = 40
    record_trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "entropy_form", EntropyForm(self.entropy_form))
        if self.lambda_ is not None and not self.lambda_ > 0:
            raise DataError("lambda must be positive, got {}".format(self.lambda_))
        if not self.lambda_scale > 0:
            raise DataError("lambda scale must be positive, got {}".format(self.lambda_scale))
        if not self.chi0_sq > 0:
            raise DataError("chi0^2 must be positive, got {}".format(self.chi0_sq))
        if not self.termination_threshold > 0:
            raise DataError("termination threshold must be positive")
        if self.max_iterations < 1:
            raise DataError("at least one iteration is needed")
        if self.num_conjugate_dirs < 1:
            raise DataError("the number of conjugate directions must be at least 1")
        if not self.positivity_floor > 0:
            raise DataError("positivity floor must be positive")
        if not 0 < self.wolfe_c1 < self.wolfe_c2 < 1:
            raise DataError("Wolfe constants need 0 < c1 < c2 < 1, got {} and {}".format(
                self.wolfe_c1, self.wolfe_c2))
        if self.prior_model is not None:
            model = np.array(self.prior_model, dtype=float)
            if model.ndim != 1 or not np.all(np.isfinite(model)) or np.any(model <= 0):
                raise DataError("prior model must be a strictly positive vector")
            model.setflags(write=False)
            object.__setattr__(self, "prior_model", model)


TraceRow = namedtuple("TraceRow", ["iteration", "q", "entropy", "chi_sq", "termination_metric", "mu"])


@dataclass
class MerResult:
    """
    Reconstruction and convergence diagnostics.

    gradient_balance is |gradS| / (lambda |gradChi2|) at the final point.
    stalled marks a run stopped because no ascent step existed any more;
    its status is max-iterations.
    """
    reconstruction: Spectrum
    iterations: int
    final_chi_sq: float
    final_entropy: float
    final_termination_metric: float
    status: MerStatus
    lambda_: float
    gradient_balance: float = math.nan
    stalled: bool = False
    trace: list = field(default_factory=list)

    def __str__(self):
        return "MER {} after {} iterations: chi2 {:.4g}, S {:.6g}, metric {:.3g}, lambda {:.4g}".format(
            self.status.value, self.iterations, self.final_chi_sq, self.final_entropy,
            self.final_termination_metric, self.lambda_)


#
# Building blocks
#

def _check_positive(f: np.ndarray, floor: float):
    if np.any(~np.isfinite(f)) or np.any(f < floor):
        raise DataError("intensities must be finite and not below the positivity floor {}".format(floor))


def _flat_model(f: np.ndarray) -> np.ndarray:
    return np.full(f.shape, float(np.mean(f)))


def entropy(f, config: MerConfig, model=None) -> float:
    """
    Entropy of a non negative distribution.

    Parameters
    ----------
    f : array
        intensities, every entry at or above the positivity floor
    config : MerConfig
        selects the form
    model : array
        default model of the skilling-gull form; falls back to the prior of
        the config, then to a flat model at the mean of f
    """
    f = np.asarray(f, dtype=float)
    _check_positive(f, config.positivity_floor)
    if config.entropy_form is EntropyForm.SHANNON:
        p = f/f.sum()
        return float(-np.sum(p*np.log(p)))
    m = _resolve_model(f, config, model)
    return float(np.sum(f - m - f*np.log(f/m)))


def entropy_gradient(f, config: MerConfig, model=None) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    _check_positive(f, config.positivity_floor)
    if config.entropy_form is EntropyForm.SHANNON:
        total = f.sum()
        p = f/total
        s = -np.sum(p*np.log(p))
        return -(np.log(p) + s)/total
    m = _resolve_model(f, config, model)
    return -np.log(f/m)


def _resolve_model(f, config, model):
    if model is None:
        model = config.prior_model
    if model is None:
        return _flat_model(f)
    model = np.asarray(model, dtype=float)
    if model.shape != f.shape:
        raise DataError("default model has {} values, the spectrum {}".format(model.size, f.size))
    return model


def _as_sigma(sigma, size: int) -> np.ndarray:
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), (size,)).copy()
    if not np.all(np.isfinite(sigma)) or np.any(sigma <= 0):
        raise DataError("noise sigma must be positive on every pixel")
    return sigma


def _as_response(response, size: int):
    if response is None:
        return None
    if isinstance(response, DetectorModel):
        response = response.response
        if response is None:
            return None
    response = np.asarray(response, dtype=float)
    if response.shape != (size, size):
        raise DataError("response must be {0}x{0}, got {1}".format(size, response.shape))
    return response


def chi_square(f, data: Spectrum, response, sigma) -> float:
    """
    Normalised mean square error of R.f against the data.

    Parameters
    ----------
    f : array
        candidate distribution
    data : Spectrum
        measured spectrum; masked pixels are left out of the sum and of N
    response : array
        N x N response matrix, a DetectorModel, or None for the identity
    sigma : float or array
        noise deviation, scalar or per pixel
    """
    return _Problem(data, response, sigma).chi_square(np.asarray(f, dtype=float))


def gradients(f, data: Spectrum, response, sigma, config: MerConfig, model=None) -> tuple:
    """
    Analytic gradients (gradS, gradChi2) at f.

    gradChi2 = 2/N_active R^T diag(active/sigma^2) (R.f - d)
    """
    f = np.asarray(f, dtype=float)
    problem = _Problem(data, response, sigma)
    return entropy_gradient(f, config, model), problem.chi_square_gradient(f)


def termination_metric(grad_entropy: np.ndarray, grad_chi: np.ndarray) -> float:
    """
    1/2 |gradS/|gradS| - gradChi2/|gradChi2||^2, between 0 (parallel) and 2
    (anti-parallel). Returns 1 when either gradient vanishes.
    """
    norm_s = np.linalg.norm(grad_entropy)
    norm_c = np.linalg.norm(grad_chi)
    if norm_s == 0 or norm_c == 0:
        return 1.0
    diff = grad_entropy/norm_s - grad_chi/norm_c
    return float(0.5*diff @ diff)


class _Problem():
    """Data term of a reconstruction: d, R, sigma and the active pixels"""

    def __init__(self, data: Spectrum, response, sigma):
        n = len(data)
        self.data = data
        self.d = np.asarray(data.intensities, dtype=float)
        self.active = data.active()
        self.n_active = int(self.active.sum())
        if self.n_active == 0:
            raise DataError("every pixel is masked: chi2 is undefined")
        self.sigma = _as_sigma(sigma, n)
        self.response = _as_response(response, n)
        # Zero on masked pixels
        self.weights = np.where(self.active, 1.0/self.sigma**2, 0.0)

    def forward(self, f):
        return f if self.response is None else self.response @ f

    def adjoint(self, v):
        return v if self.response is None else self.response.T @ v

    def chi_square(self, f) -> float:
        if f.shape != self.d.shape:
            raise DataError("distribution has {} values, the data {}".format(f.size, self.d.size))
        residual = self.forward(f) - self.d
        return float(np.sum(self.weights*residual**2)/self.n_active)

    def chi_square_gradient(self, f) -> np.ndarray:
        residual = self.forward(f) - self.d
        return 2.0/self.n_active*self.adjoint(self.weights*residual)

    def mean_active(self) -> float:
        return float(self.d[self.active].mean())

    def mean_sigma(self) -> float:
        return float(self.sigma[self.active].mean())


def _default_level(problem: _Problem) -> float:
    level = problem.mean_active()
    if level > 0:
        return level
    # Zero mean data (pure noise): fall back to the mean magnitude
    level = float(np.abs(problem.d[problem.active]).mean())
    logger.warning("non positive data mean, flat model set to the mean magnitude {:.4g}".format(level))
    return level if level > 0 else 1.0


def build_prior(peaks: list, detector: DetectorModel, background_fraction: float = 0.1,
                total: float = None) -> np.ndarray:
    """
    Default model encoding the approximate position and width of the peaks.

    Parameters
    ----------
    peaks : list
        approximate LorentzianPeak hints; an empty list gives a flat model
    detector : DetectorModel
        supplies the frequency axis
    background_fraction : float
        in (0, 1]: weight of the flat level under the peak profiles
    total : float
        when given, the model is rescaled so that sum(m) = total

    Return
    ------
    strictly positive vector of num_pixels values
    """
    return prior_on_axis(peaks, detector.frequency_axis(), background_fraction, total)


def prior_on_axis(peaks: list, frequencies_hz, background_fraction: float = 0.1,
                  total: float = None) -> np.ndarray:
    """build_prior on an explicit frequency axis (e.g. a measured spectrum)"""
    if not 0 < background_fraction <= 1:
        raise DataError("background fraction must be in (0, 1], got {}".format(background_fraction))
    if total is not None and not total > 0:
        raise DataError("cannot rescale a prior to a non positive total {}".format(total))
    freqs = np.asarray(frequencies_hz, dtype=float)
    for peak in peaks:
        if peak.center_hz < freqs[0] or peak.center_hz > freqs[-1]:
            raise DataError("prior peak at {:.3f} GHz outside the axis".format(peak.center_hz*1e-9))

    n = freqs.size
    profile = lorentzian_sum(peaks, freqs)
    if total is not None:
        flat = total/n
    elif peaks and profile.sum() > 0:
        flat = profile.sum()/n
    else:
        flat = 1.0
    model = background_fraction*flat + profile
    if total is not None:
        model *= total/model.sum()
    logger.debug("prior from {} peaks, background fraction {}".format(len(peaks), background_fraction))
    return model


class MerSolver():
    """
    Conjugate gradient ascent of Q for one data set.

    The solver owns its state and is not shared between threads.
    """

    def __init__(self, data: Spectrum, response, sigma, config: MerConfig = MerConfig()):
        """
        Parameters
        ----------
        data : Spectrum
            measured spectrum, masked pixels are reconstructed through the
            entropy term only
        response : array
            N x N response, a DetectorModel, or None for the identity
        sigma : float or array
            noise deviation
        config : MerConfig
        """
        self.problem = _Problem(data, response, sigma)
        self.config = config
        self.floor = config.positivity_floor
        n = len(data)

        if config.prior_model is not None:
            if config.prior_model.size != n:
                raise DataError("prior model has {} values, the spectrum {}".format(
                    config.prior_model.size, n))
            self.model = np.maximum(np.array(config.prior_model), self.floor)
        else:
            self.model = np.full(n, _default_level(self.problem))

        if config.lambda_ is not None:
            self.lam = config.lambda_
        else:
            self.lam = config.lambda_scale*self.problem.n_active*self.problem.mean_sigma()
            if config.entropy_form is EntropyForm.SHANNON:
                self.lam /= self.model.sum()

        self.line_search = WolfeLineSearch(config.wolfe_c1, config.wolfe_c2,
                                           config.max_line_evaluations)

    def start_point(self) -> np.ndarray:
        """Unconstrained maximum of the entropy"""
        if self.config.entropy_form is EntropyForm.SHANNON:
            return np.full(self.model.size, self.model.mean())
        return self.model.copy()

    def feasible(self) -> bool:
        """
        False when the entropy maximum already satisfies chi2 <= chi0^2:
        the data cannot be told apart from the model and the constrained
        problem degenerates.
        """
        chi = self.problem.chi_square(self.start_point())
        logger.debug("chi2 at the entropy maximum {:.4g}".format(chi))
        return chi > self.config.chi0_sq

    def entropy(self, f):
        return entropy(f, self.config, self.model)

    def evaluate(self, f) -> tuple:
        """Q, gradQ, S, chi2, gradS, gradChi2 at f"""
        s = self.entropy(f)
        chi = self.problem.chi_square(f)
        grad_s = entropy_gradient(f, self.config, self.model)
        grad_chi = self.problem.chi_square_gradient(f)
        q = s - self.lam*(chi - self.config.chi0_sq)
        return q, grad_s - self.lam*grad_chi, s, chi, grad_s, grad_chi

    def balance(self, grad_s, grad_chi) -> float:
        norm_c = self.lam*np.linalg.norm(grad_chi)
        if norm_c == 0:
            return math.inf
        return float(np.linalg.norm(grad_s)/norm_c)

    def _is_solution(self, metric, grad_s, grad_chi) -> bool:
        if metric >= self.config.termination_threshold:
            return False
        tolerance = math.sqrt(2.0*self.config.termination_threshold)
        return abs(self.balance(grad_s, grad_chi) - 1.0) <= tolerance

    def _project(self, f, direction):
        """No move below the floor for the pixels sitting on it"""
        blocked = (f <= self.floor) & (direction < 0)
        if blocked.any():
            direction = np.where(blocked, 0.0, direction)
        return direction

    def _step_limit(self, f, direction) -> float:
        """Largest step keeping 90% of the pixels above the floor"""
        falling = direction < 0
        breakpoints = np.sort((f[falling] - self.floor)/(-direction[falling]))
        k = int(math.floor(FLOOR_HIT_FRACTION*f.size))
        if breakpoints.size <= k:
            return np.inf
        return float(breakpoints[k])

    def _direction(self, f, grad, grad_prev, history, restart):
        if restart or not history:
            return self._project(f, grad.copy()), True

        p_prev = history[-1][0]
        beta = max(0.0, float(grad @ (grad - grad_prev))/float(grad_prev @ grad_prev))
        direction = grad + beta*p_prev
        # Conjugacy to the older directions through the gradient changes
        for p_old, y_old in list(history)[:-1]:
            denom = float(y_old @ p_old)
            if abs(denom) > 0:
                direction = direction - float(y_old @ direction)/denom*p_old
        direction = self._project(f, direction)
        if float(grad @ direction) <= 0:
            return self._project(f, grad.copy()), True
        return direction, False

    def solve(self, start: np.ndarray = None) -> MerResult:
        """
        Maximise Q from 'start' (the entropy maximum by default).
        """
        config = self.config
        n = self.model.size
        f = self.start_point() if start is None else np.maximum(np.asarray(start, dtype=float), self.floor)
        q, grad, s, chi, grad_s, grad_chi = self.evaluate(f)

        history = deque(maxlen=config.num_conjugate_dirs)
        trace = []
        grad_prev = None
        prev_step = prev_slope = None
        since_restart = 0
        force_restart = False
        iterations = 0
        status = MerStatus.MAX_ITERATIONS
        stalled = False

        while True:
            metric = termination_metric(grad_s, grad_chi)
            if self._is_solution(metric, grad_s, grad_chi):
                status = MerStatus.CONVERGED
                break
            if iterations >= config.max_iterations:
                break

            restart = force_restart or since_restart >= n
            direction, restarted = self._direction(f, grad, grad_prev, history, restart)
            if restarted:
                history.clear()
                since_restart = 0
            slope = float(grad @ direction)
            if not slope > 0:
                stalled = True
                break

            step_max = self._step_limit(f, direction)
            if prev_step is None or restarted:
                step0 = FIRST_STEP*f.max()/np.abs(direction).max()
            else:
                step0 = prev_step*prev_slope/slope
            if not (np.isfinite(step0) and step0 > 0):
                step0 = FIRST_STEP*f.max()/np.abs(direction).max()
            step0 = min(step0, step_max)

            def phi(mu, f=f, direction=direction):
                trial = f + mu*direction
                clamped = trial < self.floor
                trial = np.maximum(trial, self.floor)
                q_t, grad_t = self.evaluate(trial)[:2]
                return -q_t, -float(grad_t @ np.where(clamped, 0.0, direction))

            found = self.line_search.search(phi, -q, -slope, step0, step_max)
            if not found.step > 0:
                if restarted:
                    stalled = True
                    break
                force_restart = True
                continue
            force_restart = False

            f_new = np.maximum(f + found.step*direction, self.floor)
            q_new, grad_new, s, chi, grad_s, grad_chi = self.evaluate(f_new)
            history.append((direction, grad_new - grad))
            grad_prev = grad
            prev_step, prev_slope = found.step, slope
            f, q, grad = f_new, q_new, grad_new
            iterations += 1
            since_restart += 1
            if config.record_trace:
                trace.append(TraceRow(iterations, q, s, chi, termination_metric(grad_s, grad_chi),
                                      found.step))

        if stalled:
            logger.warning("MER line search stalled after {} iterations".format(iterations))
        elif status is MerStatus.MAX_ITERATIONS:
            logger.warning("MER reached {} iterations without converging".format(iterations))

        result = MerResult(reconstruction=self.problem.data.with_intensities(f),
                           iterations=iterations,
                           final_chi_sq=chi,
                           final_entropy=s,
                           final_termination_metric=termination_metric(grad_s, grad_chi),
                           status=status,
                           lambda_=self.lam,
                           gradient_balance=self.balance(grad_s, grad_chi),
                           stalled=stalled,
                           trace=trace)
        logger.debug(str(result))
        return result


def feasibility_check(data: Spectrum, response, sigma, config: MerConfig = MerConfig()) -> bool:
    """True when a meaningful reconstruction exists"""
    return MerSolver(data, response, sigma, config).feasible()


def calibrate_lambda(data: Spectrum, response, sigma, config: MerConfig = MerConfig(),
                     tolerance: float = 0.01, max_rounds: int = 30) -> float:
    """
    Bisection on log(lambda) for the multiplier whose solution has
    chi2 = chi0^2 (relative tolerance 'tolerance').

    chi2 of the solution decreases as lambda grows.
    """
    fixed = replace(config, lambda_search=False)
    target = config.chi0_sq

    def chi_at(lam):
        result = MerSolver(data, response, sigma, replace(fixed, lambda_=lam)).solve()
        return result.final_chi_sq

    start = MerSolver(data, response, sigma, fixed).lam
    chi = chi_at(start)
    lo = hi = start
    if chi > target:
        for _ in range(12):
            hi *= 10.0
            if chi_at(hi) <= target:
                break
        else:
            logger.warning("chi2 stays above chi0^2 up to lambda {:.4g}".format(hi))
            return hi
        lo = hi/10.0
    else:
        for _ in range(12):
            lo /= 10.0
            if chi_at(lo) > target:
                break
        else:
            logger.warning("chi2 stays below chi0^2 down to lambda {:.4g}".format(lo))
            return lo
        hi = lo*10.0

    for _ in range(max_rounds):
        mid = math.sqrt(lo*hi)
        chi = chi_at(mid)
        if abs(chi - target) <= tolerance*target:
            return mid
        if chi > target:
            lo = mid
        else:
            hi = mid
    logger.debug("lambda bisection stopped at [{:.4g}, {:.4g}]".format(lo, hi))
    return math.sqrt(lo*hi)


def reconstruct(data: Spectrum, response, sigma, config: MerConfig = MerConfig()) -> MerResult:
    """
    Maximum entropy reconstruction of a spectrum.

    Parameters
    ----------
    data : Spectrum
        measured spectrum (mask honoured)
    response : array
        N x N response matrix, a DetectorModel, or None for the identity
    sigma : float or array
        noise deviation, scalar or per pixel
    config : MerConfig

    Return
    ------
    MerResult; status infeasible-data when the entropy maximum already fits
    the data, in which case the reconstruction is that maximum
    """
    if config.lambda_search:
        lam = calibrate_lambda(data, response, sigma, config)
        config = replace(config, lambda_=lam, lambda_search=False)

    solver = MerSolver(data, response, sigma, config)
    if not solver.feasible():
        f = solver.start_point()
        q, grad, s, chi, grad_s, grad_chi = solver.evaluate(f)
        logger.warning("MER infeasible: chi2 {:.4g} at the entropy maximum".format(chi))
        return MerResult(reconstruction=data.with_intensities(f), iterations=0,
                         final_chi_sq=chi, final_entropy=s,
                         final_termination_metric=termination_metric(grad_s, grad_chi),
                         status=MerStatus.INFEASIBLE, lambda_=solver.lam,
                         gradient_balance=solver.balance(grad_s, grad_chi))
    return solver.solve()


TRACE_HEADER = ["iter", "Q", "S", "chi_sq", "termination_metric", "mu"]


def write_trace_csv(result: MerResult, path: str):
    """Dump the iteration trace (empty unless record_trace was set)"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for row in result.trace:
        writer.writerow([row.iteration] + [repr(float(v)) for v in row[1:]])
    atomic_write_text(path, buffer.getvalue())
