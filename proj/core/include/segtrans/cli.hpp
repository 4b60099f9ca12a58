#pragma once

namespace segtrans {

// Entry point behind the segtrans binary. Subcommands: preprocess, augment,
// train, finetune, segment, score, bootstrap, gradcheck. Returns 0 on
// success, 2 on usage errors, 1 on module errors (with a one-line
// "error: ..." on stderr).
int cli_run(int argc, const char* const* argv);

}  // namespace segtrans
