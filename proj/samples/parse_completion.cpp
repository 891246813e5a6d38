// Reads a model completion on stdin and prints the parse report as JSON.
//
//   ./parse_completion < tests/fixtures/one_shot_output.txt

#include <iostream>
#include <iterator>
#include <string>

#include "rena/output_parser.hpp"

int main() {
  std::string text{std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  const auto report = rena::parse_output({text, "stdin"}, rena::default_schema());
  std::cout << rena::report_to_json(report).dump(2) << '\n';
  return report.rejected.empty() ? 0 : 1;
}
