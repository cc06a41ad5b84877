"""
Seedable, splittable random streams for Monte Carlo runs.

A stream is fully determined by (seed, index), so trajectories simulated in
parallel give the same numbers whatever order the workers run in.
"""

from typing import List

import numpy as np

from cavity_qubit_analyzer.errors import InvalidParameterError


class RandomStreams:
    """
    Derives independent numpy generators from one root seed.
    """

    def __init__(self, seed: int):
        """
        Initialize the stream factory.

        Args:
            seed: Root seed (non-negative integer)
        """
        if int(seed) < 0:
            raise InvalidParameterError(f"Seed must be non-negative, got {seed}")
        self.seed = int(seed)

    def stream(self, index: int) -> np.random.Generator:
        """
        Get the generator for one substream.

        Args:
            index: Substream index (trajectory or sample-block number)

        Returns:
            np.random.Generator: Generator seeded from (seed, index)
        """
        sequence = np.random.SeedSequence(self.seed, spawn_key=(int(index),))
        return np.random.Generator(np.random.PCG64(sequence))

    def streams(self, count: int) -> List[np.random.Generator]:
        """
        Get the first `count` substreams.

        Args:
            count: Number of generators

        Returns:
            List[np.random.Generator]: Generators for indices 0..count-1
        """
        return [self.stream(i) for i in range(count)]
