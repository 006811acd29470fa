"""
Matching agents, the shared blackboard and the lockstep coordinator.
"""

from matchmarket.agents.agent_registry import AgentRegistry, agent_registry
from matchmarket.agents.base_agent import AgentMemory, BaseMatchingAgent, EnvironmentEntry
from matchmarket.agents.blackboard import Blackboard
from matchmarket.agents.cd_etpgs_agent import CDETPGSAgent
from matchmarket.agents.coordinator import MarketCoordinator, RoundResult
from matchmarket.agents.etpgs_agent import ETPGSAgent
from matchmarket.agents.ietpgs_agent import IETPGSAgent
from matchmarket.agents.oracle_agent import OracleAgent, RankingOracleAgent

__all__ = [
    "AgentRegistry",
    "agent_registry",
    "AgentMemory",
    "BaseMatchingAgent",
    "EnvironmentEntry",
    "Blackboard",
    "CDETPGSAgent",
    "MarketCoordinator",
    "RoundResult",
    "ETPGSAgent",
    "IETPGSAgent",
    "OracleAgent",
    "RankingOracleAgent",
]
