"""Phase estimation with squeezed vacuum states: Fisher information, SLD oracle and two-step estimators."""
