"""choramend: checker and repair engine for asserted choreographies.

Detects history-sensitivity and temporal-satisfiability defects in global
assertions and amends them by predicate strengthening, variable
propagation, and predicate lifting.
"""

__version__ = "0.1.0"
