// Copyright 2026 The dpr Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DPR_STATUS_MACROS_H_
#define DPR_STATUS_MACROS_H_

#include "absl/status/status.h"
#include "absl/status/statusor.h"

#define DPR_CONCAT_IMPL(x, y) x##y
#define DPR_CONCAT(x, y) DPR_CONCAT_IMPL(x, y)

#define RETURN_IF_ERROR(expr)                  \
  do {                                         \
    const absl::Status _dpr_status = (expr);   \
    if (!_dpr_status.ok()) return _dpr_status; \
  } while (0)

#define ASSIGN_OR_RETURN_IMPL(statusor, lhs, rexpr) \
  auto statusor = (rexpr);                          \
  if (!statusor.ok()) return statusor.status();     \
  lhs = std::move(statusor).value()

#define ASSIGN_OR_RETURN(lhs, rexpr) \
  ASSIGN_OR_RETURN_IMPL(DPR_CONCAT(_dpr_statusor_, __LINE__), lhs, rexpr)

#endif  // DPR_STATUS_MACROS_H_
