"""
Registry mapping algorithm names to agent classes.
"""

import logging
from typing import Any, Dict, List, Optional, Type

from matchmarket.agents.base_agent import BaseMatchingAgent
from matchmarket.agents.cd_etpgs_agent import CDETPGSAgent
from matchmarket.agents.etpgs_agent import ETPGSAgent
from matchmarket.agents.ietpgs_agent import IETPGSAgent
from matchmarket.agents.oracle_agent import OracleAgent, RankingOracleAgent
from matchmarket.core.change_detection import CusumState
from matchmarket.exceptions import UnknownAlgorithmError
from matchmarket.models.market import MarketInstance
from matchmarket.models.run import Algorithm

logger = logging.getLogger(__name__)


class AgentRegistry:
    """Registry for agent classes keyed by algorithm."""

    def __init__(self):
        self._agent_classes: Dict[Algorithm, Type[BaseMatchingAgent]] = {}

    def register_agent_class(self, agent_class: Type[BaseMatchingAgent]) -> None:
        """Register an agent class under its ``algorithm`` attribute."""
        self._agent_classes[agent_class.algorithm] = agent_class

    def get_agent_class(self, algorithm: Any) -> Type[BaseMatchingAgent]:
        try:
            key = Algorithm(algorithm)
        except ValueError as exc:
            raise UnknownAlgorithmError(
                f"Unknown algorithm '{algorithm}'. Known: {self.list_algorithms()}"
            ) from exc
        if key not in self._agent_classes:
            raise UnknownAlgorithmError(f"Algorithm '{key.value}' is not registered")
        return self._agent_classes[key]

    def list_algorithms(self) -> List[str]:
        return [algorithm.value for algorithm in self._agent_classes]

    def create_agents(
        self,
        algorithm: Any,
        instance: MarketInstance,
        cusum: Optional[CusumState] = None,
    ) -> List[BaseMatchingAgent]:
        """
        Instantiate one agent per market participant.

        Args:
            algorithm: algorithm name or enum
            instance: market the agents play in (oracle variants read it)
            cusum: detector template, required for cdetpgs

        Returns:
            Agents ordered by agent id
        """
        agent_class = self.get_agent_class(algorithm)
        dims = (instance.n_agents, instance.n_arms, instance.dim, instance.n_envs)
        agents: List[BaseMatchingAgent] = []
        for agent_id in range(instance.n_agents):
            kwargs: Dict[str, Any] = {}
            if issubclass(agent_class, (OracleAgent, RankingOracleAgent)):
                kwargs["instance"] = instance
            if issubclass(agent_class, CDETPGSAgent):
                if cusum is None:
                    raise ValueError("cdetpgs agents need a CUSUM configuration")
                kwargs["cusum"] = cusum.fresh()
            agents.append(agent_class(agent_id, *dims, **kwargs))
        logger.debug(f"Created {len(agents)} {agent_class.algorithm.value} agents")
        return agents

    def get_registry_statistics(self) -> Dict[str, Any]:
        return {
            "total_algorithms": len(self._agent_classes),
            "algorithms": self.list_algorithms(),
        }


# Global agent registry instance
agent_registry = AgentRegistry()

for _agent_class in (ETPGSAgent, IETPGSAgent, CDETPGSAgent, OracleAgent, RankingOracleAgent):
    agent_registry.register_agent_class(_agent_class)
