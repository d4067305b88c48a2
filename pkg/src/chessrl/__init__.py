"""chessrl: verifiable-reward chess RL pipeline.

Subpackages/modules: core (rules kernel), puzzles (Lichess ingestion and
decomposition), prompts (templates and output parsing), critics (action-value
backends), rewards (reward components), grpo (desk-scale trainer), evaluation
(strict puzzle protocol and diagnostics), service (HTTP scoring), cli.
"""

__version__ = "0.1.0"
