# Copyright 2026 The poolab Authors
# SPDX-License-Identifier: Apache-2.0
"""Python access to the poolab embedding and statistics library."""

from poolab._poolab import (
    ConfigError,
    ContractError,
    DataError,
    DimensionError,
    Encoder,
    NumericError,
    PoolabError,
    compare_report,
    layer_correlation,
    ndcg_at_k,
    run_cli,
    spearman,
    v_measure,
    wilcoxon,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DataError",
    "DimensionError",
    "Encoder",
    "NumericError",
    "PoolabError",
    "compare_report",
    "layer_correlation",
    "ndcg_at_k",
    "run_cli",
    "spearman",
    "v_measure",
    "wilcoxon",
]
