// Licence classification for display chips.  Mirrors the server's
// allowlist data file; a backend test keeps the two in sync.

const LICENSE_CLASSES: Record<string, string> = {
  "cern-ohl-s-2.0": "approved_sharealike",
  "cern-ohl-w-2.0": "approved_sharealike",
  "cern-ohl-p-2.0": "approved",
  "cern-ohl-1.2": "approved_sharealike",
  "tapr-ohl-1.0": "approved_sharealike",
  "shl-0.51": "approved",
  "solderpad-0.51": "approved",
  "mit": "approved",
  "apache-2.0": "approved",
  "bsd-2-clause": "approved",
  "bsd-3-clause": "approved",
  "gpl-3.0-only": "approved_sharealike",
  "gpl-3.0-or-later": "approved_sharealike",
  "lgpl-3.0-or-later": "approved_sharealike",
  "cc0-1.0": "approved",
  "cc-by-4.0": "approved",
  "cc-by-sa-4.0": "approved_sharealike",
  "cc-by-nc-4.0": "non_open",
  "cc-by-nc-sa-4.0": "non_open",
  "cc-by-nd-4.0": "non_open",
  "proprietary": "non_open",
};

export function licenseClass(licenseId: string): string {
  return LICENSE_CLASSES[licenseId.trim().toLowerCase()] ?? "unknown";
}

export const KNOWN_LICENSE_CLASSES = LICENSE_CLASSES;
