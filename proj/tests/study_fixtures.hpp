// Copyright 2026 The fimedit Authors.
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

#pragma once

#include <string>
#include <vector>

#include "fimedit/study_store.hpp"

namespace fimedit::testing {

/// Target means for the synthetic log below.
struct TableTargets {
  static constexpr double kTimeWithout = 903.0;
  static constexpr double kTimeWith = 645.5;
  static constexpr double kRatingDraft = 3.99;
  static constexpr double kRatingWithout = 4.61;
  static constexpr double kRatingWith = 5.52;
  static constexpr double kHallucinationDraft = 0.12;
  static constexpr double kHallucinationWithout = 0.04;
  static constexpr double kHallucinationWith = 0.03;
};

/// Events whose aggregate has exactly the target means. Elapsed times
/// alternate +-100 s around the mean (120 annotations per arm); ratings are
/// integer mixes over 100 evaluations per variant (399, 461 and 552 total).
inline std::vector<StudyEvent> table_log_events() {
  std::vector<StudyEvent> events;
  events.push_back(Session{"s-with", "ann-1", StudyTask::kWithInteraction, {}, "t0"});
  events.push_back(Session{"s-without", "ann-2", StudyTask::kWithoutInteraction, {}, "t0"});
  events.push_back(Session{"s-eval", "ann-3", StudyTask::kEvaluation, {}, "t0"});
  for (int d = 0; d < 120; ++d) {
    const std::string doc = "doc-" + std::to_string(d);
    const std::int64_t swing = d % 2 == 0 ? -100000 : 100000;
    AnnotationRecord without{"s-without", doc, "draft", "human", 903000 + swing, {}, 0, {}};
    AnnotationRecord with{"s-with", doc, "draft", "human", 645500 + swing, {}, 2, {{0, 1}}};
    events.push_back(without);
    events.push_back(with);
  }
  struct Mix {
    SummaryVariant variant;
    int low;          // rating given to the first `n_low` evaluations
    int n_low;        // the rest get low + 1
    int hallucinated; // evaluations flagging issue 0
  };
  // 3 + 99*4 = 399, 39*4 + 61*5 = 461, 48*5 + 52*6 = 552.
  const Mix mixes[] = {{SummaryVariant::kDraft, 3, 1, 12},
                       {SummaryVariant::kHumanNoInteraction, 4, 39, 4},
                       {SummaryVariant::kHumanWithInteraction, 5, 48, 3}};
  for (const auto& m : mixes) {
    for (int k = 0; k < 100; ++k) {
      EvaluationRecord e;
      e.session_id = "s-eval";
      e.document_id = "doc-" + std::to_string(k);
      e.variant = m.variant;
      e.rating = k < m.n_low ? m.low : m.low + 1;
      e.issues[0] = k < m.hallucinated;
      e.verdict = k % 4 == 0 ? Verdict::kReject : k % 4 == 1 ? Verdict::kAcceptWithEdits
                                                             : Verdict::kAccept;
      events.push_back(e);
    }
  }
  return events;
}

}  // namespace fimedit::testing
