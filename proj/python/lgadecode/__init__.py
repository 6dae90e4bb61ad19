# Copyright 2026 The lgadecode Authors
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
"""Layer-aggregated CTC decoding over LGA1 hidden-state dumps."""

from ._core import (
    ArgumentError,
    Error,
    FormatError,
    InvariantError,
    IoError,
    LMState,
    ModelDump,
    NGramLM,
    Vocabulary,
    aggregate_logits,
    average_attention,
    beam_search_decode,
    cer,
    confidence_profile,
    decode_dump,
    diagonality_score,
    edit_distance,
    greedy_decode,
    interpolate,
    list_dumps,
    load_dump,
    log_softmax,
    normalize_text,
    predict_log_probs,
    project,
    token_evolution,
    tune_grid,
    wer,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
