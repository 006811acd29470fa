"""
Shared per-round flags and exploration-phase counters.
"""

import logging
from dataclasses import dataclass, field
from typing import List

logger = logging.getLogger(__name__)


@dataclass
class Blackboard:
    """AND-reduced recovery and change-detection flags plus the shared phase clock."""

    env_flag: bool = True
    cd_flag: bool = True
    tau_end: int = 0
    phase_index: int = 0
    phase_starts: List[int] = field(default_factory=list)

    def reset(self) -> None:
        """Round-start reset of both flags."""
        self.env_flag = True
        self.cd_flag = True

    def and_env(self, ok: bool) -> None:
        self.env_flag = self.env_flag and bool(ok)

    def and_cd(self, ok: bool) -> None:
        self.cd_flag = self.cd_flag and bool(ok)

    @staticmethod
    def block(phase_index: int) -> int:
        return 2 ** phase_index

    def trigger_exploration(self, t: int) -> bool:
        """Start the next phase at ``t`` if recovery failed and no phase is running.

        The phase covers rounds ``t .. t + 2^l - 1``.
        """
        if self.env_flag or t <= self.tau_end:
            return False
        length = self.block(self.phase_index)
        self.tau_end = t + length - 1
        self.phase_index += 1
        self.phase_starts.append(t)
        logger.debug(f"Exploration phase {self.phase_index} of length {length} at round {t}")
        return True

    def in_exploration(self, t: int) -> bool:
        return t <= self.tau_end

    def restart(self) -> None:
        """Clear the phase clock after a detected change."""
        self.tau_end = 0
        self.phase_index = 0
        self.phase_starts = []
        self.reset()
