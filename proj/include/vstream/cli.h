#ifndef VSTREAM_CLI_H_
#define VSTREAM_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace vstream {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitIo = 2;

// Entry point of the `vstream` tool. `args` excludes the program name.
// Returns 0 on success, 1 on a validation error (including bad flags and a
// failing gradcheck), 2 on an I/O or parse error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace vstream

#endif  // VSTREAM_CLI_H_
