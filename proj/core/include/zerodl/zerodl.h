// Copyright 2026 The zerodl Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ZERODL_ZERODL_H_
#define ZERODL_ZERODL_H_

#include "zerodl/aggregation.h"
#include "zerodl/backends.h"
#include "zerodl/corpus.h"
#include "zerodl/errors.h"
#include "zerodl/evaluation.h"
#include "zerodl/gateway.h"
#include "zerodl/meta.h"
#include "zerodl/pipeline.h"
#include "zerodl/prompts.h"

#endif  // ZERODL_ZERODL_H_
