"""Psychometric toolkit for developing and validating Likert rating scales.

The package covers survey screening and matrix construction, sampling
adequacy checks, exploratory factor analysis with parallel analysis,
Cronbach's alpha subset search, one-factor confirmatory factor analysis,
construct-validity summaries and a seeded survey simulator.
"""

__version__ = "0.1.0"

from .basestats import CorrelationMatrix, MeanCI, mean_ci, pearson_matrix, pearson_r
from .cfa import CfaModel, CfaSolution, fit_covariance, fit_one_factor, interpret_fit
from .dataset import (ItemCatalog, LikertSpec, RatingMatrix, RawSurvey, SurveyRow,
                      build_matrix, composite_score, read_survey_csv, reverse_score,
                      screen_respondents, write_survey_csv)
from .efa import (EfaSolution, parallel_analysis, principal_axis_factoring, promax,
                  reduced_eigenvalues, rotate, varimax)
from .errors import (ConvergenceError, DataError, LikertKitError, NotPositiveDefiniteError,
                     NumericalError)
from .reliability import cronbach_alpha, subset_search
from .simgen import SimSpec, simulate, simulate_survey
from .suitability import assess, bartlett_sphericity, kmo
from .validity import (convergent_validity, discriminant_validity, known_group_comparison,
                       map_unit_to_likert, validity_report)

__all__ = [
    "CfaModel", "CfaSolution", "ConvergenceError", "CorrelationMatrix", "DataError",
    "EfaSolution", "ItemCatalog", "LikertKitError", "LikertSpec", "MeanCI",
    "NotPositiveDefiniteError", "NumericalError", "RatingMatrix", "RawSurvey", "SimSpec",
    "SurveyRow", "assess", "bartlett_sphericity", "build_matrix", "composite_score",
    "convergent_validity", "cronbach_alpha", "discriminant_validity", "fit_covariance",
    "fit_one_factor", "interpret_fit", "kmo", "known_group_comparison", "map_unit_to_likert",
    "mean_ci", "parallel_analysis", "pearson_matrix", "pearson_r", "principal_axis_factoring",
    "promax", "read_survey_csv", "reduced_eigenvalues", "reverse_score", "rotate",
    "screen_respondents", "simulate", "simulate_survey", "subset_search", "validity_report",
    "varimax", "write_survey_csv",
]
