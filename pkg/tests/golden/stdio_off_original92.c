/* Minimal RVM host skeleton.  Specialize with the annotation processor. */

#include <stdlib.h>

#define RB 92
#define RIBN_CODES 20

static const char *ribn = " '  &<rqZ%8lklZ&8lkm";


typedef long obj;
obj *stack, pc;

void init(void) {
  stack = 0;
}


void prim(int no) {
  switch (no) {
    case 0:
      push3();
      break;
    case 1:
      mul();
      break;
    case 2:
      exit(top_num());
  }
}

int main(void) {
  init();
  run();
  return 0;
}
