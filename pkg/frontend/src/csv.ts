// Minimal RFC-4180-style CSV reader for the solver's report files.
// Header row is mandatory; quoted fields and CRLF / LF line ends are accepted.

import { readFileSync } from 'fs'

export interface Table {
  header: string[]
  rows: string[][]
}

export function parseCsv(text: string): Table {
  const records: string[][] = []
  let field = ''
  let row: string[] = []
  let inQuotes = false
  let i = 0
  const pushField = () => { row.push(field); field = '' }
  const pushRow = () => { pushField(); records.push(row); row = [] }
  while (i < text.length) {
    const c = text[i]
    if (inQuotes) {
      if (c === '"') {
        if (text[i + 1] === '"') { field += '"'; i += 2; continue }
        inQuotes = false; i += 1; continue
      }
      field += c; i += 1; continue
    }
    if (c === '"') { inQuotes = true; i += 1; continue }
    if (c === ',') { pushField(); i += 1; continue }
    if (c === '\r') { i += 1; continue }
    if (c === '\n') { pushRow(); i += 1; continue }
    field += c; i += 1
  }
  if (field !== '' || row.length > 0) pushRow()
  const nonEmpty = records.filter((r) => !(r.length === 1 && r[0] === ''))
  if (nonEmpty.length === 0) throw new Error('empty CSV: header row is mandatory')
  return { header: nonEmpty[0], rows: nonEmpty.slice(1) }
}

export function readTable(path: string): Table {
  return parseCsv(readFileSync(path, 'utf8'))
}

export function column(table: Table, name: string): string[] {
  const k = table.header.indexOf(name)
  if (k < 0) throw new Error(`missing column ${name}`)
  return table.rows.map((r) => r[k])
}

export function numericColumn(table: Table, name: string): number[] {
  return column(table, name).map((v) => (v === 'NA' ? NaN : Number(v)))
}
