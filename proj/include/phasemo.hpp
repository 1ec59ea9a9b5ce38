// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PHASEMO_PHASEMO_HPP
#define PHASEMO_PHASEMO_HPP

#include "phasemo/adaptability.hpp"
#include "phasemo/cfr_io.hpp"
#include "phasemo/channel.hpp"
#include "phasemo/config.hpp"
#include "phasemo/core.hpp"
#include "phasemo/error.hpp"
#include "phasemo/frontend.hpp"
#include "phasemo/link.hpp"
#include "phasemo/oracle.hpp"
#include "phasemo/power.hpp"
#include "phasemo/precoding.hpp"
#include "phasemo/rng.hpp"
#include "phasemo/simulation.hpp"
#include "phasemo/waveform.hpp"

#endif  // PHASEMO_PHASEMO_HPP
