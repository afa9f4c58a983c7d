"""mrsession: multirole session channels.

Channels are typed chan(G,S) where G is the set of roles one party
implements and S a session type read relative to G.  The package
provides the session-type vocabulary, a reference interpreter with a
linear typechecker, a concurrent channel runtime with link combinators
for assembling multiparty sessions out of dyadic ones, and a
deadlock-freedom analyzer over channel-set snapshots.
"""

from . import calculus, df_analysis, protocols, runtime, session_types, trace
from .roles import DEFAULT_UNIVERSE, Group, RoleUniverse, complement, complements_disjoint, role_block

__all__ = [
    "DEFAULT_UNIVERSE",
    "Group",
    "RoleUniverse",
    "calculus",
    "complement",
    "complements_disjoint",
    "df_analysis",
    "protocols",
    "role_block",
    "runtime",
    "session_types",
    "trace",
]

__version__ = "0.1.0"
