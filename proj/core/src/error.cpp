// Copyright 2026 The binflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "binflow/error.hpp"
