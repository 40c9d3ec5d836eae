// Copyright 2026 The adlrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ADL_ADL_HPP_
#define ADL_ADL_HPP_

#include "adl/cnn.hpp"
#include "adl/config.hpp"
#include "adl/dataset.hpp"
#include "adl/embedding.hpp"
#include "adl/error.hpp"
#include "adl/eval.hpp"
#include "adl/frontend.hpp"
#include "adl/io.hpp"
#include "adl/ontology.hpp"
#include "adl/oversample.hpp"
#include "adl/pipeline.hpp"
#include "adl/records.hpp"
#include "adl/rng.hpp"
#include "adl/segment.hpp"
#include "adl/wav.hpp"

#endif  // ADL_ADL_HPP_
