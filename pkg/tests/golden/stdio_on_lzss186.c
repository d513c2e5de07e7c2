/* Minimal RVM host skeleton.  Specialize with the annotation processor. */

#include <stdlib.h>
#include <stdio.h>

#define RB 186
#define RIBN_CODES 28

static const unsigned char ribn[] = {0,6,0,0,5,112,125,180,113,186,32,117,4,108,121,120,121,117,5,186,42,122};
static const int range_start[] = {0,106,107,108,114,115,116,117,118,118,119,120,181,182,183,183,184,185,185};

#define SB 7
void lzss_expand(void);

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
      add();
      break;
    case 2:
      putchar(top_num());
      fflush(stdout);
      break;
  }
}

int main(void) {
  init();
  run();
  return 0;
}
