# File: linesearch.py
# Date: 15-10-2026
#
"""
Line search satisfying the strong Wolfe conditions.

The search works on a one dimensional function phi(step) to be minimised
along a descent direction (phi'(0) < 0): maximisers pass the negated
objective. It first brackets an acceptable step by expansion, then zooms
inside the bracket with safeguarded quadratic interpolation.
"""

from collections import namedtuple

import numpy as np

from .errors import DataError

# step: accepted step (0 when nothing satisfied sufficient decrease)
# value, slope: phi and phi' at that step
# evaluations: number of phi calls
# wolfe: True when both conditions hold, False when only sufficient
#        decrease holds (budget exhausted or step_max reached)
LineSearchResult = namedtuple("LineSearchResult", ["step", "value", "slope", "evaluations", "wolfe"])


class WolfeLineSearch():
    """
    Strong Wolfe line search.

    Sufficient decrease: phi(a) <= phi(0) + c1 a phi'(0)
    Curvature:           |phi'(a)| <= c2 |phi'(0)|
    """

    def __init__(self, c1: float = 1e-4, c2: float = 0.9, max_evaluations: int = 40,
                 expansion: float = 2.0):
        if not 0 < c1 < c2 < 1:
            raise DataError("Wolfe constants need 0 < c1 < c2 < 1, got {} and {}".format(c1, c2))
        if max_evaluations < 1:
            raise DataError("at least one evaluation is needed")
        self.c1 = c1
        self.c2 = c2
        self.max_evaluations = int(max_evaluations)
        self.expansion = expansion

    def _armijo(self, step, value, phi0, dphi0):
        return value <= phi0 + self.c1*step*dphi0

    def _curvature(self, slope, dphi0):
        return abs(slope) <= -self.c2*dphi0

    def search(self, phi, phi0: float, dphi0: float, step0: float,
               step_max: float = np.inf) -> LineSearchResult:
        """
        Parameters
        ----------
        phi : callable
            phi(step) -> (value, slope)
        phi0, dphi0 : float
            value and slope at step 0; dphi0 must be negative
        step0 : float
            first trial step
        step_max : float
            largest admissible step

        Return
        ------
        LineSearchResult
        """
        if not dphi0 < 0:
            return LineSearchResult(0.0, phi0, dphi0, 0, False)

        prev_step, prev_value, prev_slope = 0.0, phi0, dphi0
        step = min(step0, step_max)
        evaluations = 0
        while evaluations < self.max_evaluations:
            value, slope = phi(step)
            evaluations += 1
            if not np.isfinite(value):
                # Outside the domain: shrink toward the last good point
                step = prev_step + 0.5*(step - prev_step)
                continue

            if not self._armijo(step, value, phi0, dphi0) or \
               (evaluations > 1 and value >= prev_value):
                return self._zoom(phi, phi0, dphi0, prev_step, prev_value, prev_slope,
                                  step, value, evaluations)

            if self._curvature(slope, dphi0):
                return LineSearchResult(step, value, slope, evaluations, True)

            if slope >= 0:
                return self._zoom(phi, phi0, dphi0, step, value, slope,
                                  prev_step, prev_value, evaluations)

            if step >= step_max:
                # Cannot expand further, sufficient decrease holds
                return LineSearchResult(step, value, slope, evaluations, False)

            prev_step, prev_value, prev_slope = step, value, slope
            step = min(step*self.expansion, step_max)

        return LineSearchResult(prev_step, prev_value, prev_slope, evaluations, False)

    def _zoom(self, phi, phi0, dphi0, lo, lo_value, lo_slope, hi, hi_value, evaluations):
        """
        Shrink the bracket [lo, hi] (unordered) keeping 'lo' the best point
        satisfying sufficient decrease.
        """
        while evaluations < self.max_evaluations:
            width = hi - lo
            # Minimiser of the quadratic through (lo, lo_value, lo_slope) and (hi, hi_value)
            curvature = hi_value - lo_value - lo_slope*width
            if curvature > 0:
                step = lo - 0.5*lo_slope*width**2/curvature
            else:
                step = lo + 0.5*width
            left, right = min(lo, hi), max(lo, hi)
            margin = 0.1*abs(width)
            if not (left + margin <= step <= right - margin):
                step = lo + 0.5*width

            value, slope = phi(step)
            evaluations += 1
            if not np.isfinite(value) or not self._armijo(step, value, phi0, dphi0) \
               or value >= lo_value:
                hi, hi_value = step, value
            else:
                if self._curvature(slope, dphi0):
                    return LineSearchResult(step, value, slope, evaluations, True)
                if slope*(hi - lo) >= 0:
                    hi, hi_value = lo, lo_value
                lo, lo_value, lo_slope = step, value, slope

        return LineSearchResult(lo, lo_value, lo_slope, evaluations, False)
