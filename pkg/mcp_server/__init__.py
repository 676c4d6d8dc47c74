# Probability Geometry MCP Server
