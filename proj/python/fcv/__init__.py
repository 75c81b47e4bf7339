# Copyright (c) 2026 The fcv Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#   http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Two-stage cough-sound screening pipeline (python bindings)."""

try:
    from fcv._fcv import *  # noqa: F401,F403  (installed package layout)
    from fcv._fcv import __doc__ as _native_doc  # noqa: F401
except ImportError:  # in-tree build: the module sits on PYTHONPATH
    from _fcv import *  # noqa: F401,F403

__all__ = [
    "FcvError",
    "Scorer",
    "auc",
    "cross_validate",
    "decode_wav",
    "encode_wav",
    "gem_pool",
    "gen_synthetic",
    "hz_to_mel",
    "kfold_split",
    "log_mel",
    "mel_to_hz",
    "resample",
    "route",
    "routes_table",
    "spec_augment",
    "train",
]
