// SPDX-FileCopyrightText: (c) 2026 The ScriptNet Authors
//
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace scriptnet {

// Storage type of every tensor. The f64 flavour of the library exists for
// tight gradient verification; production builds use f32.
#ifdef SCRIPTNET_F64
using Scalar = double;
#else
using Scalar = float;
#endif

inline constexpr bool kDoublePrecision = sizeof(Scalar) == sizeof(double);

}  // namespace scriptnet
