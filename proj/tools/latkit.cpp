// latkit command-line tool (placeholder; commands are filled in as the
// library grows).

#include <iostream>

int main(int argc, char** argv) {
  (void)argc;
  (void)argv;
  std::cerr << "latkit: no commands available yet\n";
  return 2;
}
