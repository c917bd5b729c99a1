"""Supervised datasets, time-slice CV, tuning, backtests and accuracy tests."""

from .backtest import ForecastReport, HorizonResult, TuneResult, TuningError, backtest, tune
from .cv import CvPlan, Fold, time_slice_folds
from .dataset import ForecastTask, SupervisedDataset, make_supervised_dataset
from .metrics import DMResult, diebold_mariano, nrmse, rmse
from .models import ModelFamily, fit_pipeline
from .synthetic import ConstructSpec, SyntheticEconomy, generate_synthetic_economy

__all__ = [
    "ConstructSpec", "CvPlan", "DMResult", "Fold", "ForecastReport", "ForecastTask",
    "HorizonResult", "ModelFamily", "SupervisedDataset", "SyntheticEconomy", "TuneResult",
    "TuningError", "backtest", "diebold_mariano", "fit_pipeline", "generate_synthetic_economy",
    "make_supervised_dataset", "nrmse", "rmse", "time_slice_folds", "tune",
]
