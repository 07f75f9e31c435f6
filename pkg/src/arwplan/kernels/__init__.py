"""Hot loops; compiled with numba unless ARWPLAN_DISABLE_NUMBA is set."""
