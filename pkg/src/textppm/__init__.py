"""Text-aware predictive monitoring of business processes.

Encodes event logs with numerical, categorical, and textual attributes into
fixed-length vector sequences, trains a multi-task LSTM to predict the next
activity, next timestamp, outcome, and cycle time of running cases, and
compares against annotated-transition-system baselines.
"""

__version__ = "0.1.0"

from .log_model import END_ACTIVITY  # noqa: E402,F401  (canonical reserved label)
