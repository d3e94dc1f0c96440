// Copyright 2026 The Cipollino Authors
// SPDX-License-Identifier: Apache-2.0

//! AS-aware circuit selection for onion-routing clients.

pub mod client;
pub mod commands;
pub mod pathcache;
pub mod sim;
pub mod risk;
pub mod topology;
pub mod tor;
