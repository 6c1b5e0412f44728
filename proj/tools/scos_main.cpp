#include "scos.h"

int main(int argc, char** argv) {
  scos_session* session = scos_session_new();
  if (!session) return 1;
  int code = scos_run_command(session, argc - 1, argv + 1);
  scos_session_free(session);
  return code;
}
