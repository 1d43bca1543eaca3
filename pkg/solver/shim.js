// Minimal optimizing-SMT solver process: reads an SMT-LIB 2 script on stdin,
// evaluates it with the bundled Z3 build, writes the answers to stdout.
'use strict';

const { init } = require('z3-solver');

async function main() {
  const chunks = [];
  for await (const chunk of process.stdin) chunks.push(chunk);
  const script = Buffer.concat(chunks).toString('utf8');
  const { Z3 } = await init();
  const cfg = Z3.mk_config();
  const ctx = Z3.mk_context(cfg);
  const out = await Z3.eval_smtlib2_string(ctx, script);
  process.stdout.write(out.endsWith('\n') ? out : out + '\n');
  process.exit(0);
}

main().catch((err) => {
  process.stderr.write(String(err && err.stack ? err.stack : err) + '\n');
  process.exit(1);
});
