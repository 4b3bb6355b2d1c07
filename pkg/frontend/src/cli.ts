#!/usr/bin/env node
// postproc <kind> <csv...> -o <image>
// Kinds: convergence, lambda-sweep, outlet-compare, energy.

import { FigureKind, SchemaError, plot } from './figures.js'

const KINDS: Record<string, FigureKind> = {
  convergence: 'CONVERGENCE',
  'lambda-sweep': 'LAMBDA_SWEEP',
  'outlet-compare': 'OUTLET_COMPARE',
  energy: 'ENERGY',
}

export function parseArgs(argv: string[]): { kind: FigureKind, inputs: string[], output: string } {
  if (argv.length === 0) throw new Error(`usage: postproc <${Object.keys(KINDS).join('|')}> <csv...> -o <image>`)
  const kind = KINDS[argv[0]]
  if (!kind) throw new Error(`unknown figure kind '${argv[0]}' (choose ${Object.keys(KINDS).join(', ')})`)
  const inputs: string[] = []
  let output = ''
  for (let i = 1; i < argv.length; i += 1) {
    if (argv[i] === '-o' || argv[i] === '--output') {
      output = argv[i + 1] ?? ''
      i += 1
    } else {
      inputs.push(argv[i])
    }
  }
  if (!output) throw new Error('missing required -o <image>')
  if (inputs.length === 0) throw new Error('missing input CSV paths')
  return { kind, inputs, output }
}

export function main(argv: string[]): number {
  try {
    const { kind, inputs, output } = parseArgs(argv)
    const { image, sidecar } = plot({ kind, inputs, output })
    process.stdout.write(`wrote ${image} and ${sidecar}\n`)
    return 0
  } catch (err) {
    const msg = err instanceof Error ? err.message : String(err)
    process.stderr.write(`postproc: ${msg}\n`)
    return err instanceof SchemaError ? 2 : 1
  }
}

const invokedDirectly = process.argv[1] !== undefined
  && import.meta.url.endsWith(process.argv[1].split('/').pop() ?? '!')
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)))
}
