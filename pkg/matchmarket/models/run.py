"""
Run-level enumerations shared by agents, services and schemas.
"""

from enum import Enum


class Algorithm(str, Enum):
    """Agent algorithm enumeration."""
    ETPGS = "etpgs"
    IETPGS = "ietpgs"
    CDETPGS = "cdetpgs"
    ORACLE = "oracle"
    RANKING_ORACLE = "ranking-oracle"


class TraceLevel(str, Enum):
    """Trace granularity enumeration."""
    OFF = "off"
    ROUNDS = "rounds"
    DIAGNOSTICS = "diagnostics"


class RoundAction(str, Enum):
    """What an agent did in one round."""
    EXPLORE = "explore"
    FORCED = "forced"
    GS = "gs"


class RoundClass(str, Enum):
    """Regret attribution of one agent-round."""
    EXPLORE = "explore"
    GS = "gs"
    EXPLOIT = "exploit"
    VIOLATION = "violation"
