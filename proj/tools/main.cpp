#include "cli.hpp"

int main(int argc, char **argv)
{
  return bpmri::cli::ParseAndDispatch(argc, argv);
}
