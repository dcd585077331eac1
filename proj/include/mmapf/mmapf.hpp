/*
 * Copyright (C) 2026 mmapf contributors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
*/

#ifndef MMAPF__MMAPF_HPP
#define MMAPF__MMAPF_HPP

#include <mmapf/model.hpp>
#include <mmapf/validator.hpp>
#include <mmapf/solver.hpp>
#include <mmapf/dynamic.hpp>
#include <mmapf/explain.hpp>
#include <mmapf/io.hpp>

#endif // MMAPF__MMAPF_HPP
