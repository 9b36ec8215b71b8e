# Copyright 2026 The mixconv Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Mixed depthwise convolution (MixConv) kernels, cost accounting and models."""

from ._core import (
    MixConvError,
    TrainingDivergedError,
    UnknownNameError,
    count,
    default_kernels,
    depthwise,
    gradcheck,
    gradcheck_ops,
    mixconv,
    model_config,
    model_names,
    oracle,
    oracle_suites,
    partition_equal,
    partition_exponential,
    pointwise,
    sweep,
    train,
)

__all__ = [
    "MixConvError",
    "TrainingDivergedError",
    "UnknownNameError",
    "count",
    "default_kernels",
    "depthwise",
    "gradcheck",
    "gradcheck_ops",
    "mixconv",
    "model_config",
    "model_names",
    "oracle",
    "oracle_suites",
    "partition_equal",
    "partition_exponential",
    "pointwise",
    "sweep",
    "train",
]
