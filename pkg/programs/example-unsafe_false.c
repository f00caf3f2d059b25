// Same rotating state machine, but the property moved after the loop:
// it claims the machine never stops in state 4.  Running exactly three
// iterations leaves s == 4, so the program is unsafe.  The state variable
// s does not occur in the loop-exit condition, which is what makes the
// termination-vars havoc heuristic miss this bug.
int s;
int x1;
int x2;
int cont;

s = 1;
x1 = 0;
x2 = 0;
cont = nondet();
while (cont != 0) {
  if (s == 1) {
    x1 = x1 + 1;
  } else {
    if (s == 2) {
      x2 = x2 + 1;
    }
  }
  s = s + 1;
  if (s == 5) {
    s = 1;
  }
  cont = nondet();
}
assert(!(s >= 4));
