// Copyright 2026 The condfluor Developers
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(condfluor::cli::run(std::env::args_os()));
}
