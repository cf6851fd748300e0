"""Power-aware intrusion-detection monitor election for wireless ad hoc networks.

Modules: ``topology`` (network and battery model), ``ca_engine`` (binary and
fuzzy cellular automata), ``ga_evolve`` (rule search), ``classifier`` (CA
basin tree), ``election`` (monitor election and cluster re-election),
``simulator`` (tick loop and paired comparison) and ``cli``.
"""

__version__ = "0.1.0"
